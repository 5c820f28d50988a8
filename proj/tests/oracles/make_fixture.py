#!/usr/bin/env python3
"""Builds the 12-record x 3-system fixture under tests/data/fixture.

Writes corpus, responses, a vector store and a label store keyed by
sha256(NFC(text)), Likert ratings, and numpy-computed fidelity goldens.
Rerunning produces byte-identical files.
"""

import hashlib
import json
import pathlib
import re
import unicodedata

import numpy as np

OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "fixture"
DIM = 16

SENTIMENTS = ["Very Negative", "Negative", "Neutral", "Positive", "Very Positive"]
EMOTIONS = [
    "admiration", "amusement", "anger", "annoyance", "approval", "caring",
    "confusion", "curiosity", "desire", "disappointment", "disapproval", "disgust",
    "embarrassment", "excitement", "fear", "gratitude", "grief", "joy",
    "love", "nervousness", "optimism", "pride", "realization", "relief",
    "remorse", "sadness", "surprise", "neutral",
]

RECORDS = [
    ("q01", "White", "What is a normal resting heart rate for adults?",
     "A normal resting heart rate for adults is between 60 and 100 beats per minute. Athletes often have lower rates."),
    ("q02", "Green", "Can I take ibuprofen with food?",
     "Ibuprofen reduces inflammation. Take it with food."),
    ("q03", "Yellow", "How long does a common cold last?",
     "Most colds resolve within seven to ten days. Rest, fluids and simple pain relief help. See a doctor if symptoms worsen after a week."),
    ("q04", "Orange", "What are warning signs of a stroke?",
     "Sudden facial drooping, arm weakness and slurred speech are warning signs. Call emergency services immediately if you notice them."),
    ("q05", "Red", "My chest hurts and my left arm is numb. What should I do?",
     "These symptoms may indicate a heart attack. Call emergency services now and chew an aspirin unless you are allergic."),
    ("q06", "White", "Is it safe to exercise during pregnancy?",
     "Moderate exercise is generally safe and beneficial during pregnancy. Discuss any new program with your obstetrician."),
    ("q07", "Green", "What causes seasonal allergies?",
     "Seasonal allergies are caused by an immune reaction to pollen from trees, grasses and weeds. Antihistamines usually control the symptoms."),
    ("q08", "Yellow", "How is type 2 diabetes diagnosed?",
     "Type 2 diabetes is diagnosed with a fasting glucose test, an HbA1c test or an oral glucose tolerance test. Repeat testing confirms the result."),
    ("q09", "Orange", "What should I do about a deep cut that keeps bleeding?",
     "Apply firm pressure with a clean cloth for ten minutes. If bleeding continues or the wound is deep, go to an emergency department."),
    ("q10", "Red", "My child swallowed a button battery. What now?",
     "This is an emergency. Go to the nearest emergency department immediately and do not induce vomiting."),
    ("q11", "White", "How much water should I drink each day?",
     "Needs vary, but about two litres a day suits most adults. Drink more in hot weather or during exercise."),
    ("q12", "Green", "Are generic medicines as effective as brand names?",
     "Generic medicines contain the same active ingredient and must meet the same standards. They are considered equally effective."),
]

BASE = {
    "q01": "For most adults, a normal resting heart rate ranges from 60 to 100 beats per minute, although well-trained athletes frequently measure considerably lower values without any underlying pathology.",
    "q02": "Yes. Taking ibuprofen with food or milk substantially reduces gastrointestinal irritation, which is the most common adverse effect associated with nonsteroidal anti-inflammatory medications.",
    "q03": "A common cold typically lasts between seven and ten days. Symptomatic management with hydration, rest and over-the-counter analgesics is appropriate, while persistent or worsening symptoms warrant medical evaluation.",
    "q04": "Recognize a stroke using the FAST criteria: facial asymmetry, arm weakness, speech disturbance, and time to contact emergency services. Immediate intervention dramatically improves neurological outcomes.",
    "q05": "Chest pain accompanied by left arm numbness may represent an acute myocardial infarction. Contact emergency services immediately and consider chewing aspirin if you have no contraindications.",
    "q06": "Regular moderate physical activity during pregnancy is generally considered safe and offers cardiovascular, metabolic and psychological benefits. Consult your obstetric provider regarding individual contraindications.",
    "q07": "Seasonal allergic rhinitis results from an IgE-mediated hypersensitivity reaction to airborne pollen. Management includes allergen avoidance, oral antihistamines and intranasal corticosteroids.",
    "q08": "Type 2 diabetes is diagnosed using fasting plasma glucose, glycated hemoglobin, or an oral glucose tolerance test, with confirmation through repeated measurement in asymptomatic individuals.",
    "q09": "Apply continuous direct pressure using a clean dressing. Persistent hemorrhage, considerable wound depth or signs of infection require prompt evaluation at an emergency department.",
    "q10": "Button battery ingestion is a medical emergency that can cause severe esophageal injury within hours. Proceed to the nearest emergency department immediately and avoid inducing vomiting.",
    "q11": "Daily fluid requirements vary with body size, activity and climate; approximately two litres is adequate for most adults, with additional intake during exercise or hot conditions.",
    "q12": "Generic medications contain identical active ingredients and must demonstrate bioequivalence to the reference product, so they are considered therapeutically equivalent.",
}

EMPATHY = {
    "q01": "That is a great question. For most adults, a resting heart rate between 60 and 100 beats per minute is normal, and fit people often sit a bit lower.",
    "q02": "I understand the worry. Yes, taking ibuprofen with food is a good idea because it is gentler on your stomach.",
    "q03": "I am sorry you are feeling unwell. Most colds get better in about a week to ten days. Rest and drink plenty of fluids, and see a doctor if you feel worse.",
    "q04": "It is wise to know this. Watch for a drooping face, a weak arm or slurred speech, and call for help right away if you see them.",
    "q05": "I am really concerned for you. Please call emergency services right now, and chew an aspirin if you are not allergic.",
    "q06": "It is lovely that you want to stay active. Gentle to moderate exercise is usually safe in pregnancy, but check with your care team first.",
    "q07": "Allergies can be so frustrating. They happen when your body reacts to pollen, and allergy tablets often help a lot.",
    "q08": "It is natural to want answers. Doctors use simple blood tests to check your sugar levels, and they often repeat the test to be sure.",
    "q09": "That sounds frightening. Press firmly on the cut with a clean cloth, and go to the emergency department if it keeps bleeding.",
    "q10": "I know this is scary. Please go to the emergency department right now and do not try to make your child vomit.",
    "q11": "It is great that you are thinking about this. About two litres a day works for most people, and a little more when it is hot.",
    "q12": "That is a sensible thing to ask. Generic medicines have the same active ingredient and work just as well as brand names.",
}

REPHRASE = {
    "q01": "A normal resting heart rate for adults is 60 to 100 beats per minute. Athletes often have a lower rate.",
    "q02": "Ibuprofen lowers inflammation. Take it with food.",
    "q03": "Most colds clear up in seven to ten days. Rest, fluids and simple pain relief help. See a doctor if you get worse after a week.",
    "q04": "Warning signs include a drooping face, arm weakness and slurred speech. Call emergency services at once if you notice them.",
    "q05": "These symptoms could mean a heart attack. Call emergency services now and chew an aspirin unless you are allergic.",
    "q06": "Moderate exercise is usually safe and helpful in pregnancy. Talk about any new program with your obstetrician.",
    "q07": "Seasonal allergies come from an immune reaction to pollen from trees, grasses and weeds. Antihistamines usually control them.",
    "q08": "Type 2 diabetes is diagnosed with a fasting glucose test, an HbA1c test or a glucose tolerance test. A repeat test confirms it.",
    "q09": "Press firmly with a clean cloth for ten minutes. If the bleeding continues or the wound is deep, go to an emergency department.",
    "q10": "This is an emergency. Go to the nearest emergency department right away and do not make the child vomit.",
    "q11": "Needs differ, but about two litres a day suits most adults. Drink more in hot weather or when exercising.",
    "q12": "Generic medicines have the same active ingredient and meet the same standards. They are equally effective.",
}

SYSTEMS = [("GPT5_Base", BASE), ("GPT5_Empathy", EMPATHY), ("GPT5_Rephrase", REPHRASE)]

# Likert ratings: (role, variant, criterion, [scores]).
RATINGS = [
    ("Expert", "Physician Answer", "Accuracy", [5, 5]),
    ("Expert", "GPT5_Base", "Accuracy", [3, 5]),
    ("Expert", "GPT5_Empathy", "Accuracy", [4, 4]),
    ("Expert", "GPT5_Rephrase", "Accuracy", [5]),
    ("Expert", "Physician Answer", "Style", [4, 4]),
    ("Expert", "GPT5_Base", "Style", [2, 4]),
    ("Expert", "GPT5_Empathy", "Style", [5, 3]),
    ("Expert", "GPT5_Rephrase", "Style", [4, 4]),
    ("Patient", "Physician Answer", "Trust", [5, 5]),
    ("Patient", "GPT5_Base", "Trust", [1, 5]),
    ("Patient", "GPT5_Empathy", "Trust", [5, 5]),
    ("Patient", "GPT5_Rephrase", "Trust", [3, 5]),
    ("Patient", "Physician Answer", "EmotionalTone", [3, 3]),
    ("Patient", "GPT5_Base", "EmotionalTone", [2, 2]),
    ("Patient", "GPT5_Empathy", "EmotionalTone", [5, 5]),
    ("Patient", "GPT5_Rephrase", "EmotionalTone", [3, 4]),
]


def content_hash(text: str) -> str:
    return hashlib.sha256(unicodedata.normalize("NFC", text).encode("utf-8")).hexdigest()


def embed(text: str) -> list[float]:
    v = np.zeros(DIM)
    v[0] = 0.5
    for tok in re.findall(r"[a-z0-9']+", text.lower()):
        h = hashlib.sha256(tok.encode("utf-8")).digest()
        sign = 1.0 if h[1] & 1 else -1.0
        v[h[0] % DIM] += sign * (1.0 + (h[2] % 4) / 4.0)
    return [float(x) for x in v]


def labels(text: str) -> tuple[str, list[float]]:
    h = hashlib.sha256(("labels:" + text).encode("utf-8")).digest()
    sentiment = SENTIMENTS[[0, 0, 1, 2, 2, 2, 3][h[0] % 7]]
    raw = np.array([1.0 + h[i % 32] for i in range(1, 29)])
    raw[h[29] % 28] *= 4.0
    dist = raw / raw.sum()
    return sentiment, [round(float(x), 6) for x in dist]


def jsonl(rows) -> str:
    return "".join(json.dumps(r, ensure_ascii=False, separators=(",", ":")) + "\n" for r in rows)


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    corpus = [
        {"id": rid, "question": q, "answer": a, "source": "fixture", "severity": sev}
        for rid, sev, q, a in RECORDS
    ]
    (OUT / "corpus.jsonl").write_text(jsonl(corpus), encoding="utf-8")

    responses = [
        {"id": rid, "system": system, "text": texts[rid]}
        for system, texts in SYSTEMS
        for rid, *_ in RECORDS
    ]
    (OUT / "responses.jsonl").write_text(jsonl(responses), encoding="utf-8")

    texts = [a for *_, a in RECORDS] + [r["text"] for r in responses]
    unique = {}
    for t in texts:
        unique.setdefault(content_hash(t), t)
    keys = sorted(unique)
    vec_rows = [{"sha256": k, "dim": DIM, "vector": embed(unique[k])} for k in keys]
    (OUT / "vectors.jsonl").write_text(jsonl(vec_rows), encoding="utf-8")
    lab_rows = []
    for k in keys:
        s, e = labels(unique[k])
        lab_rows.append({"sha256": k, "sentiment": s, "emotions": e})
    (OUT / "labels.jsonl").write_text(jsonl(lab_rows), encoding="utf-8")

    lines = ["role,variant,criterion,score"]
    for role, variant, crit, scores in RATINGS:
        lines += [f"{role},{variant},{crit},{s}" for s in scores]
    (OUT / "ratings.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    golden = []
    ref = {rid: np.array(embed(a)) for rid, _, _, a in RECORDS}
    for system, texts_by_id in SYSTEMS:
        for rid, *_ in RECORDS:
            c = np.array(embed(texts_by_id[rid]))
            cos = float(np.dot(ref[rid], c) / (np.linalg.norm(ref[rid]) * np.linalg.norm(c)))
            golden.append({"id": rid, "system": system, "fidelity": cos})
    (OUT / "fidelity_golden.json").write_text(json.dumps(golden, indent=1) + "\n", encoding="utf-8")

    dominant = {}
    sentiment_counts = {}
    for system, texts_by_id in [("Physician Answer", {rid: a for rid, _, _, a in RECORDS})] + SYSTEMS:
        counts = [0] * 5
        for rid, *_ in RECORDS:
            s, e = labels(texts_by_id[rid])
            counts[SENTIMENTS.index(s)] += 1
            dominant.setdefault(system, []).append(EMOTIONS[int(np.argmax(e))])
        sentiment_counts[system] = counts
    summary = {"sentiment_counts": sentiment_counts, "dominant": dominant}
    (OUT / "affect_golden.json").write_text(json.dumps(summary, indent=1) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
