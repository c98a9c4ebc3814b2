#!/usr/bin/env python3
"""Regenerate the bundled data files under data/.

Everything is deterministic: rerunning produces identical bytes.
Writes the RBS, the category set, stop-words, config defaults, synthetic
word/sentence vectors, the lifecycle fixture and the demo corpus.
"""
import csv
import hashlib
import io
import json
import re
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"
DIM = 48

RBS = [
    ("Environmental", [
        ("Environmental permitting and requirements", 10),
        ("National Environmental Policy Act Review (NEPA) process and documentation", 8),
        ("Hazardous materials", 6),
        ("Wetlands and endangered species", 5),
        ("Archaeological and cultural sites", 4),
        ("Environmental regulation change", 5),
        ("Additional environmental analysis required", 7),
        ("Water quality", 4),
        ("Noise mitigation", 5),
        ("Unidentified contaminated soils", 4),
    ]),
    ("Construction", [
        ("Contractor access", 4),
        ("Different site and subsurface condition", 7),
        ("Construction safety", 5),
        ("Schedule uncertainty", 5),
        ("Coordination with adjacent projects", 3),
        ("Work windows", 4),
        ("Material and resources availability", 8),
        ("Construction incorporates new or unproven technology", 3),
        ("Contractor and subcontractor performance", 7),
        ("Weather related issues", 3),
        ("Buried man-made objects", 3),
        ("Construction quality assurance and control issues", 3),
    ]),
    ("Management and Funding", [
        ("Delayed decision making", 3),
        ("Project purpose/scope change", 6),
        ("Cash flow restrictions", 3),
        ("Labor disruptions", 6),
        ("Force majeure", 3),
        ("Economic change and availability of funding", 6),
        ("Political or policy changes", 8),
    ]),
    ("Design", [
        ("Design changes", 7),
        ("Design requirement", 3),
        ("Design incomplete", 2),
        ("Delay in design approval", 3),
        ("Design exceptions", 3),
        ("Aesthetic issues", 4),
    ]),
    ("Right of Way", [
        ("Right of way acquisition issues", 9),
        ("Right of way cost uncertainty", 5),
        ("Additional Right of way is required", 5),
        ("Right of way plan", 4),
        ("Railroad and right of way entry", 8),
        ("Right of way relocation", 3),
    ]),
    ("Utilities", [
        ("Utility coordination", 6),
        ("Utility requirement", 2),
        ("Utilities conflicts", 2),
        ("Utility funding may be inadequate", 2),
        ("Utility relocation", 6),
    ]),
    ("Stakeholder", [
        ("Public involvement", 8),
        ("Additional Scope for third parties", 5),
        ("New stakeholders emerge and demand new work", 4),
        ("Stakeholders request late changes", 5),
        ("Objection from local communities and agencies", 7),
        ("Communication with stakeholders", 6),
    ]),
    ("Procurement and contracting", [
        ("Change in delivery method", 3),
        ("Market condition", 9),
        ("Contract language and legal issues", 9),
        ("Change order and claim", 5),
        ("Delays in procurement", 4),
    ]),
    ("Organizational", [
        ("Change in leadership", 5),
        ("Organizational resources", 4),
        ("Project dependencies", 3),
        ("Organizational policy and prioritization", 4),
    ]),
    ("Structure and Geotechnical", [
        ("Soil and geotechnical conditions", 3),
        ("Construction excavation", 3),
        ("Pile driving noise and vibration", 3),
        ("Structural foundation design", 7),
    ]),
    ("Traffic", [
        ("Traffic growth", 9),
        ("Toll related issues", 4),
        ("Bicyclist and pedestrian recommendations may not be supported", 4),
        ("Unanticipated Mobility and/or traffic delays", 3),
        ("Land use changes", 3),
    ]),
]

CATEGORIES = [
    ("environmental", "permits, environmental review, hazardous materials, wetlands, species, water quality, noise"),
    ("structure and geotechnical", "soil conditions, foundations, excavation, piles, structural design"),
    ("design", "design changes, incomplete design, design approval, design exceptions, requirements"),
    ("right of way", "right of way acquisition, property cost, relocation, access agreements"),
    ("utilities", "utility relocation, utility conflicts, utility coordination and agreements"),
    ("railroad", "railroad agreements, railroad coordination, rail crossings and entry permits"),
    ("partnerships and stakeholders", "public involvement, local agencies, communities, third party requests"),
    ("management and funding", "funding availability, cash flow, scope change, political and policy decisions"),
    ("contracting and procurement", "procurement delays, contract language, claims, change orders, market conditions"),
    ("construction", "contractor performance, site conditions, materials, weather, safety, work windows, quality"),
]

STOP_WORDS = """a about above after again against all am an and any are as at be because been before being
below between both but by can could did do does doing down during each few for from further had has have
having he her here hers herself him himself his how i if in into is it its itself just me more most my
myself no nor not now of off on once only or other our ours ourselves out over own same she should so
some such than that the their theirs them themselves then there these they this those through to too
under until up very was we were what when where which while who whom why will with would you your yours
yourself yourselves may might must shall also etc""".split()

# Topic words: tokens sharing a topic get nearby vectors.
TOPICS = {
    "environment": "environmental environment nepa permitting permit permits review documentation hazardous materials "
                   "wetlands wetland endangered species archaeological cultural sites regulation regulations analysis "
                   "water quality noise mitigation contaminated soils contamination stormwater habitat",
    "site": "site subsurface condition conditions differing different buried man made objects unknown underground",
    "contractor": "contractor contractors subcontractor subcontractors performance access coordination adjacent "
                  "work windows workforce",
    "materials": "material materials resources availability supply shortage steel concrete prices",
    "schedule": "schedule uncertainty delay delays delayed late timeline slippage",
    "safety": "safety accident injury hazard",
    "weather": "weather related storm flooding rain winter",
    "quality": "quality assurance control inspection defects technology new unproven",
    "funding": "funding cash flow restrictions economic change availability budget financial finance money "
               "inadequate grant",
    "politics": "political policy policies changes decision making leadership prioritization organizational "
                "organization resources dependencies purpose",
    "labor": "labor disruptions strike union force majeure",
    "design": "design designs requirement requirements incomplete approval exceptions aesthetic changes plans "
              "drawings specification",
    "row": "right way acquisition acquire parcel parcels property condemnation relocation plan entry land",
    "rail": "railroad rail crossing crossings",
    "utility": "utility utilities relocation conflicts coordination gas water line lines fiber power",
    "stakeholder": "public involvement stakeholders stakeholder third parties communities community local agencies "
                   "agency objection communication request demand emerge outreach opposition",
    "procurement": "procurement delivery method market condition contract language legal issues claim claims order "
                   "orders bid bids bidding",
    "geotech": "soil geotechnical excavation pile driving vibration structural foundation foundations slope bridge "
               "structure",
    "traffic": "traffic growth toll tolling mobility bicyclist pedestrian recommendations supported congestion "
               "volume",
}

# Demo risk texts: families of paraphrases drawn by the demo projects.
DEMO_FAMILIES = [
    ["Right of way acquisition issues", "Delay in right of way acquisition", "Right of way parcel acquisition delay"],
    ["Utility relocation", "Utility relocation delays", "Relocation of gas and water utility lines"],
    ["Environmental permitting and requirements", "Environmental permit delays", "Additional environmental permits required"],
    ["Hazardous materials", "Unknown hazardous materials on site", "Contaminated soils and hazardous materials"],
    ["Different site and subsurface condition", "Differing subsurface site conditions", "Unknown underground site conditions"],
    ["Material and resources availability", "Steel and concrete material shortage", "Material prices and supply availability"],
    ["Contractor and subcontractor performance", "Poor contractor performance", "Subcontractor performance issues"],
    ["Weather related issues", "Winter weather delays", "Storm and flooding weather impacts"],
    ["Design changes", "Late design changes", "Design changes after approval"],
    ["Economic change and availability of funding", "Funding availability", "Budget and funding shortfall"],
    ["Political or policy changes", "Policy changes by new leadership", "Political decision delays"],
    ["Public involvement", "Community opposition and public outreach", "Objection from local communities and agencies"],
    ["Railroad and right of way entry", "Railroad crossing agreement", "Railroad entry permit delay"],
    ["Soil and geotechnical conditions", "Geotechnical soil conditions for foundation", "Slope and soil geotechnical issues"],
    ["Traffic growth", "Traffic volume growth", "Toll traffic congestion"],
    ["Contract language and legal issues", "Contract claims and legal issues", "Change order and claim"],
    ["Market condition", "Bid market condition", "Market condition raises bid prices"],
    ["Construction safety", "Work zone safety accident", "Construction safety hazard"],
    ["Schedule uncertainty", "Schedule slippage", "Timeline delay uncertainty"],
    ["Noise mitigation", "Noise wall mitigation", "Construction noise and vibration"],
]

DEMO_PROJECTS = [
    # id, type, state, delivery, value, family indices, award year
    ("D01", "highway", "CA", "DBB", 1250.0, [0, 1, 2, 3, 4, 5, 6, 8, 9, 14], 2012),
    ("D02", "highway", "CA", "DB", 820.0, [0, 1, 2, 4, 6, 7, 10, 11, 15, 16], 2014),
    ("D03", "highway", "TX", "DBB", 430.0, [0, 2, 3, 5, 7, 8, 12, 14, 17, 18], 2011),
    ("D04", "bridge", "WA", "DB", 1610.0, [1, 2, 4, 6, 9, 11, 13, 15, 19], 2016),
    ("D05", "highway", "FL", "P3", 2100.0, [0, 1, 5, 9, 10, 14, 15, 16, 18], 2015),
    ("D06", "transit", "VA", "DBB", 640.0, [0, 1, 2, 6, 8, 11, 12, 13, 17], 2013),
    ("D07", "highway", "VA", "P3", 1730.0, [2, 3, 4, 7, 9, 10, 14, 16, 19], 2017),
]

DEMO_TESTS = [
    ("T01", "highway", "CA", "DBB", 910.0, [0, 1, 2, 4, 5, 8, 14], 2018),
    ("T02", "bridge", "WA", "DB", 1180.0, [1, 3, 6, 11, 13, 15], 2019),
]

# Synthetic cost/time growth per lifecycle-fixture project for the style comparison.
PERFORMANCE = {
    "P1": (0.04, 0.10), "P2": (0.06, 0.12), "P3": (0.03, 0.08), "P4": (0.21, 0.35), "P5": (0.18, 0.30),
    "P6": (0.25, 0.41), "P7": (0.09, 0.15), "P8": (0.16, 0.33), "P9": (0.02, 0.05), "P10": (0.05, 0.07),
    "P11": (0.22, 0.38),
}

LIFECYCLE_CORPUS = [
    # id, type, state, delivery, value $M, registers, initial ident/realized, construction ident/realized
    (1, "highway", "CA", "DB", 1421, 5, 32, 31, 6, 6),
    (2, "highway", "IA", "DBB", 1131, 4, 24, 21, 22, 22),
    (3, "highway", "TX", "DBB", 4922, 4, 85, 72, 16, 16),
    (4, "highway", "CA", "DBB", 1792, 4, 43, 39, 103, 68),
    (5, "highway", "CA", "DBB", 986, 4, 19, 15, 28, 17),
    (6, "highway", "FL", "DBB", 684, 5, 131, 24, 193, 188),
    (7, "bridge_and_tunnel", "CA", "DB", 1492, 4, 65, 36, 24, 9),
    (8, "highway", "MD", "DBB", 814, 2, 15, 9, 30, 11),
    (9, "bridge_and_tunnel", "KY", "DBB", 583, 2, 15, 3, 1, 0),
    (10, "highway", "TX", "DB", 693, 2, 15, 3, 2, 0),
    (11, "highway", "MI", "P3", 1137, 2, 14, 4, 41, 3),
]


PROBE_SENTENCES = ["Security requirements"]


def tokens(text):
    return [t for t in re.findall(r"[a-z0-9]+", text.lower()) if t not in STOP_WORDS]


def seeded(name):
    return np.random.default_rng(int.from_bytes(hashlib.sha256(name.encode()).digest()[:8], "little"))


def write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")


def dump_json(obj):
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def rbs_texts():
    return [text for _, items in RBS for text, _ in items]


def write_static():
    write(DATA / "rbs_table21.json", dump_json({"categories": [
        {"name": name, "items": [{"text": t, "frequency": f} for t, f in items]} for name, items in RBS]}))
    write(DATA / "wsdot_categories.json", dump_json({"categories": [
        {"label": label, "description": desc} for label, desc in CATEGORIES]}))
    write(DATA / "stopwords_en.txt", "# English stop-words\n" + "\n".join(sorted(set(STOP_WORDS))) + "\n")
    write(DATA / "inference_rules.json", dump_json({"happening_probability": 0.9, "require_impact": True}))
    write(DATA / "style_thresholds.json", dump_json({"doer": 0.5, "careful": 0.5}))
    write(DATA / "scales_default.json", dump_json({
        "probability_band_edges": [0.1, 0.3, 0.5, 0.7],
        "cost_band_edges": [0.001, 0.005, 0.01, 0.05],
        "schedule_band_edges": [1, 3, 6, 12],
    }))


def word_vectors(vocabulary):
    basis = {}
    for topic in sorted(TOPICS):
        v = seeded("topic:" + topic).normal(size=DIM)
        basis[topic] = v / np.linalg.norm(v)
    topic_of = {}
    for topic, words in TOPICS.items():
        for w in words.split():
            topic_of.setdefault(w, []).append(topic)
    table = {}
    for word in sorted(vocabulary):
        noise = seeded("word:" + word).normal(size=DIM)
        noise /= np.linalg.norm(noise)
        if word in topic_of:
            v = sum(basis[t] for t in topic_of[word]) + 0.45 * noise
        else:
            v = noise
        table[word] = v
    return table


def fmt(x):
    return f"{x:.6f}"


def demo_register(project_id, families, ordinal, value):
    rows = []
    for k, fam in enumerate(families):
        variants = DEMO_FAMILIES[fam]
        name = variants[(k + len(project_id) + int(project_id[-1])) % len(variants)]
        h = seeded(f"{project_id}:{fam}")
        prob = round(float(h.uniform(0.1, 0.8)), 2)
        cost = round(float(h.uniform(0.0005, 0.03)) * value, 2)
        sched = round(float(h.uniform(0.5, 10.0)), 1)
        status = ""
        if ordinal == 1 and k % 4 == 0:
            status = "Hap"
        rows.append({"risk_id": f"{project_id}-R{k + 1:02d}", "name": name,
                     "description": f"{name} affecting {project_id} delivery", "category": "",
                     "probability": prob, "cost_impact": cost, "schedule_impact": sched, "status": status})
    if ordinal == 1:
        rows.append({"risk_id": f"{project_id}-R90", "name": "Schedule slippage", "description": "",
                     "category": "", "probability": 0.4, "cost_impact": "", "schedule_impact": 2.0, "status": ""})
    return rows


REGISTER_FIELDS = ["risk_id", "name", "description", "category", "probability", "cost_impact", "schedule_impact",
                   "status", "snapshot"]


def csv_text(rows, fields):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def manifest_entry(pid, ptype, state, delivery, value, year, registers):
    return {"id": pid, "project_type": ptype, "jurisdiction": state, "delivery_method": delivery,
            "contract_value_musd": value, "award_year": year, "registers": registers}


def write_demo():
    base = DATA / "fixtures" / "demo"
    texts = []

    def build(projects, manifest_name, snapshots):
        entries = []
        for pid, ptype, state, delivery, value, fams, year in projects:
            regs = []
            for ordinal in range(snapshots):
                rows = demo_register(pid, fams, ordinal, value)
                for r in rows:
                    r["snapshot"] = ordinal
                    texts.append(r["name"])
                rel = f"registers/{pid}_s{ordinal}.csv"
                write(base / rel, csv_text(rows, REGISTER_FIELDS))
                regs.append({"ordinal": ordinal, "label": f"register {ordinal}", "path": rel})
            entries.append(manifest_entry(pid, ptype, state, delivery, value, year, regs))
        write(base / manifest_name, dump_json({"projects": entries}))

    build(DEMO_PROJECTS, "manifest.json", 2)
    build(DEMO_TESTS, "test_manifest.json", 1)
    return texts


def lifecycle_corpus_rows(row):
    pid, _, _, _, value, nreg, ii, ir, ci, cr = row
    names = rbs_texts()
    per_snapshot = {k: [] for k in range(nreg)}
    lifecycle = []
    counter = 0

    def add(risk_id, name, states):
        # states: list of (ordinal, state)
        for ordinal, state in states:
            rec = {"risk_id": risk_id, "name": name, "description": "", "category": "",
                   "probability": "", "cost_impact": "", "schedule_impact": "", "status": state,
                   "snapshot": ordinal}
            if state == "Hap" and int(risk_id.split("-")[-1]) % 3 == 0:
                # left to the inference rule: near-certain with a recorded impact
                rec.update(status="", probability=0.95, cost_impact=round(value * 0.002, 2))
            elif state == "Reg":
                rec.update(probability=0.3)
            per_snapshot[ordinal].append(rec)
            lifecycle.append({"project_id": f"P{pid}", "risk_id": risk_id, "snapshot": ordinal, "state": state})

    last = nreg - 1
    for k in range(ii):
        counter += 1
        rid = f"P{pid}-{counter:03d}"
        name = names[(counter + pid) % len(names)]
        if k < ir:
            hap = 1 + k % last if last >= 1 else 0
            states = [(o, "Reg") for o in range(hap)] + [(hap, "Hap")]
            if hap < last:
                states.append((hap + 1, "Clo"))
        else:
            close = 1 + k % last
            states = [(o, "Reg") for o in range(close)]
            if close < last or k % 2 == 0:
                states.append((close, "Clo"))
        add(rid, name, states)
    for k in range(ci):
        counter += 1
        rid = f"P{pid}-{counter:03d}"
        name = names[(counter * 7 + pid) % len(names)]
        first = 1 + k % last
        if k < cr:
            hap = first + (k // last) % (last - first + 1)
            states = [(o, "Reg") for o in range(first, hap)] + [(hap, "Hap")]
        else:
            states = [(o, "Reg") for o in range(first, last + 1)]
            if k % 2 == 1 and first < last:
                states[-1] = (last, "Clo")
        add(rid, name, states)
    return per_snapshot, lifecycle


def write_lifecycle_corpus():
    base = DATA / "fixtures" / "lifecycle_corpus"
    entries = []
    lifecycle = []
    for row in LIFECYCLE_CORPUS:
        pid, ptype, state, delivery, value, nreg = row[:6]
        per_snapshot, lc = lifecycle_corpus_rows(row)
        lifecycle.extend(lc)
        regs = []
        for ordinal in range(nreg):
            rel = f"registers/P{pid}_s{ordinal}.csv"
            rows = sorted(per_snapshot[ordinal], key=lambda r: r["risk_id"])
            write(base / rel, csv_text(rows, REGISTER_FIELDS))
            regs.append({"ordinal": ordinal, "label": f"register {ordinal}", "path": rel})
        entries.append(manifest_entry(f"P{pid}", ptype, state, delivery, float(value), None, regs))
    for e in entries:
        del e["award_year"]
    write(base / "manifest.json", dump_json({"projects": entries}))
    write(base / "lifecycle.csv", csv_text(lifecycle, ["project_id", "risk_id", "snapshot", "state"]))
    perf = "project_id,cost_growth,time_growth\n" + "".join(
        f"{pid},{c},{t}\n" for pid, (c, t) in PERFORMANCE.items())
    write(base / "performance.csv", perf)


def main():
    write_static()
    demo_texts = write_demo()
    write_lifecycle_corpus()

    vocab_texts = rbs_texts() + [f"{l} {d}" for l, d in CATEGORIES] + [
        f"{v} affecting" for fam in DEMO_FAMILIES for v in fam] + demo_texts + PROBE_SENTENCES
    vocab = set()
    for t in vocab_texts:
        vocab.update(tokens(t))
    for words in TOPICS.values():
        vocab.update(words.split())
    table = word_vectors(vocab)
    lines = [f"{len(table)} {DIM}"] + [w + " " + " ".join(fmt(x) for x in v) for w, v in table.items()]
    write(DATA / "embeddings" / "word_vectors.txt", "\n".join(lines) + "\n")

    # Sentence table: word average weighted by inverse-square document
    # frequency plus a small per-sentence offset, standing in for an offline
    # sentence encoder.
    sentence_texts = sorted(set(rbs_texts() + demo_texts + PROBE_SENTENCES))
    doc_freq = {}
    for text in sentence_texts:
        for t in set(tokens(text)):
            doc_freq[t] = doc_freq.get(t, 0) + 1
    seen = set()
    out = []
    for text in sentence_texts:
        key = " ".join(text.lower().split())
        if key in seen:
            continue
        seen.add(key)
        toks = [t for t in tokens(text) if t in table]
        weights = [doc_freq[t] ** -2.0 for t in toks]
        v = np.average([table[t] for t in toks], axis=0, weights=weights)
        v = v / np.linalg.norm(v) + 0.15 * seeded("sentence:" + key).normal(size=DIM) / np.sqrt(DIM)
        out.append(json.dumps({"text": text, "vector": [round(float(x), 6) for x in v]}))
    write(DATA / "embeddings" / "sentences.jsonl", "\n".join(out) + "\n")


if __name__ == "__main__":
    main()
