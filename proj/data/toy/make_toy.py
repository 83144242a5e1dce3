"""Regenerates retrieval.jsonl: 20 questions with 5 retrieved passages each."""
import json
import pathlib

FACTS = [
    ("Which river flows through Cairo?", ["Nile", "the Nile River"], "The Nile"),
    ("Who wrote Pride and Prejudice?", ["Jane Austen", "Austen"], "Jane Austen"),
    ("What is the capital of Australia?", ["Canberra"], "Canberra"),
    ("Which planet is known as the Red Planet?", ["Mars"], "Mars"),
    ("Who painted the Mona Lisa?", ["Leonardo da Vinci", "Leonardo"], "Leonardo da Vinci"),
    ("What is the largest ocean on Earth?", ["Pacific Ocean", "Pacific"], "The Pacific Ocean"),
    ("In which city is the Colosseum?", ["Rome"], "Rome"),
    ("Who developed the theory of general relativity?", ["Albert Einstein", "Einstein"], "Albert Einstein"),
    ("What is the chemical symbol for gold?", ["Au"], "Au"),
    ("Which country hosted the 2016 Summer Olympics?", ["Brazil"], "Brazil"),
    ("What is the tallest mountain in Africa?", ["Kilimanjaro", "Mount Kilimanjaro"], "Mount Kilimanjaro"),
    ("Who composed the Four Seasons?", ["Antonio Vivaldi", "Vivaldi"], "Antonio Vivaldi"),
    ("What is the smallest prime number?", ["2", "two"], "2"),
    ("Which language is spoken in Quebec besides English?", ["French"], "French"),
    ("Who was the first person to walk on the Moon?", ["Neil Armstrong", "Armstrong"], "Neil Armstrong"),
    ("What is the currency of Japan?", ["yen", "Japanese yen"], "The yen"),
    ("Which gas do plants absorb from the air?", ["carbon dioxide", "CO2"], "Carbon dioxide"),
    ("Who discovered penicillin?", ["Alexander Fleming", "Fleming"], "Alexander Fleming"),
    ("What is the longest river in South America?", ["Amazon", "Amazon River"], "The Amazon"),
    ("Which city is known as the Big Apple?", ["New York City", "New York"], "New York City"),
]

FILLER = [
    "The museum reopened after a long renovation and now offers guided tours in the morning.",
    "Local farmers reported a strong harvest this year thanks to steady spring rain.",
    "The committee postponed its decision until the next quarterly meeting.",
    "A new rail line connects the two suburbs and cuts commuting time in half.",
    "The novel was adapted into a television series that ran for three seasons.",
    "Researchers measured the migration routes of several bird species over a decade.",
    "The bridge was painted a bright colour to improve its visibility in fog.",
    "Volunteers cleaned the beach and collected several tonnes of plastic waste.",
]

EVIDENCE = [
    "{a} is the answer most sources give: {q_short}",
    "According to the encyclopedia entry, {a} is correct. {q_short}",
    "Historians and teachers agree on {a} when asked this. {q_short}",
    "A widely cited reference states that {a} fits here. {q_short}",
    "Quiz books list {a} for this question. {q_short}",
]

# evidential documents per query, ranks they occupy
COUNTS = [0, 1, 2, 3, 4, 5, 2, 1, 3, 0, 2, 4, 1, 2, 3, 5, 1, 2, 0, 3]


def main():
    out = pathlib.Path(__file__).with_name("retrieval.jsonl")
    lines = []
    for i, ((q, answers, surface), n) in enumerate(zip(FACTS, COUNTS)):
        ctxs = []
        for r in range(1, 6):
            evidential = (r + i) % 5 < n
            if evidential:
                text = EVIDENCE[(r + i) % len(EVIDENCE)].format(a=surface, q_short=q.rstrip("?") + ".")
            else:
                text = FILLER[(i * 3 + r) % len(FILLER)]
            ctxs.append({"id": f"q{i:02d}-d{r}", "title": f"Passage {r}", "text": text,
                         "rank": r, "score": round(1.0 - r * 0.1, 2)})
        lines.append(json.dumps({"id": f"q{i:02d}", "question": q, "answers": answers,
                                 "dataset": "toy", "ctxs": ctxs}, ensure_ascii=False))
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
