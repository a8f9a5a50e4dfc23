"""Writes data/reference_tables.json from the published numbers.

Cells are "value", "**value**" (best) and an optional trailing "*".
"""
import json
import pathlib
import re

EMOTION_COLUMNS = ["Neut.", "Fear.", "Diss.", "Apol.", "Abus.", "Exci.", "Sat.", "Macro", "Weigh."]
EMOTION = [
    ("ContextBERT", "", "95.1 35.7 36.4 70.3 19.4 34.1 90.0 47.7 83.8"),
    ("EMO-gpt", "", "95.5 38.7 37.3 71.1 27.4 40.8 90.7 51.0 84.8"),
    ("PREV-gpt", "", "**95.6*** 21.5 **40.5*** 73.4* 27.9 41.9 **91.1*** 49.4 **85.3**"),
    ("EMO-llama", "", "95.4 51.7* 34.5 71.0 21.3 39.8 90.5 51.5 84.6"),
    ("PREV-llama", "", "**95.6*** **55.2** 37.9 **74.2** **36.7*** **44.0*** **91.1*** **55.4*** 85.2*"),
]

TASK_COLUMNS = [("Inform", 2), ("Success", 2), ("JGA", 2), ("CBE", 2), ("Unique tri.", 1), ("BLEU", 2)]
TASK = [
    ("SIMPLE-gpt", "gpt", "81.98 75.72 65.06 **1.64*** **2336.8** 22.29"),
    ("EMO-gpt", "gpt", "82.12 76.18 64.71 1.61 2315.8 22.40"),
    ("PREV-gpt", "gpt", "**83.56*** **78.04*** **65.21** 1.59 2291.6 **22.55***"),
    ("SIMPLE-llama", "llama", "78.50 70.46 **64.20** 1.95 4054.8 22.78"),
    ("EMO-llama", "llama", "78.36 70.28 64.00 **1.96** 4151.2 **22.91**"),
    ("PREV-llama", "llama", "**83.32*** **75.14*** 63.08 **1.96** **4309.0*** 22.35"),
]

RANK_COLUMNS = [("#1", 2, True, True), ("#2", 2, True, True), ("#3", 2, True, True),
                ("Mean Rank", 2, False, True), ("kappa", 2, True, False)]
RANK = [
    ("SIMPLE", "", "35.56 40.56 **23.89** 1.88 0.57"),
    ("PREV", "", "40.00 **51.67** 8.33 1.68 0.43"),
    ("REFINE", "", "**70.00** 22.22 7.78 **1.38** 0.41"),
]

CELL = re.compile(r"^(\*\*)?([0-9.]+)(\*\*)?(\*)?$")


def cells(text):
    out = []
    for tok in text.split():
        m = CELL.match(tok)
        assert m, tok
        out.append({"value": float(m.group(2)), "bold": bool(m.group(1)),
                    "star": bool(m.group(4))})
    return out


def table(title, columns, rows):
    return {
        "title": title,
        "columns": columns,
        "rows": [{"system": s, "group": g, "cells": cells(t)} for s, g, t in rows],
        "comparisons": [],
    }


def main():
    doc = {
        "label_stats": {
            "emotions": ["neutral", "fearful", "dissatisfied", "apologetic", "abusive", "excited", "satisfied"],
            "counts": [51426, 381, 914, 838, 44, 860, 17061],
        },
        "emotion": table("Emotion F1 (%)",
                         [{"name": n, "decimals": 1, "higher_is_better": True, "marked": True}
                          for n in EMOTION_COLUMNS],
                         EMOTION),
        "task": table("Task performance",
                      [{"name": n, "decimals": d, "higher_is_better": True, "marked": True}
                       for n, d in TASK_COLUMNS],
                      TASK),
        "ranking": table("Human ranking",
                         [{"name": n, "decimals": d, "higher_is_better": h, "marked": m}
                          for n, d, h, m in RANK_COLUMNS],
                         RANK),
    }
    path = pathlib.Path(__file__).resolve().parent.parent / "data" / "reference_tables.json"
    path.write_text(json.dumps(doc, indent=2) + "\n")


if __name__ == "__main__":
    main()
