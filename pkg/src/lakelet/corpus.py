"""Synthetic diabetes-encounter corpus and its schema-on-read readers.

Records mimic the attribute set of a hospital diabetes dataset: an
encounter core (demographics, utilization counts, diagnoses, medication
fields, readmission), a nested laboratory panel, and free-text progress
notes. Each synthetic patient is drawn from one of four latent condition
archetypes (diet-controlled, uncontrolled hyperglycemia, renal
complication, cardiovascular complication); the archetype shapes the lab
panel and note content strongly and the encounter core moderately, so
clustering quality genuinely depends on how much of the record a pipeline
can see.

One patient becomes exactly one record. Its format is drawn from the
corpus composition: delimited text with a header line (bulk EMR export),
a nested JSON document carrying the lab panel (third-party lab feed), or
a progress note (event stream). Generation is deterministic: the same
(n, seed, composition) yields byte-identical corpora.

The reader half binds structure at analysis time: any stored payload is
parsed back into one row over the unified column set, with None for
whatever a record kind does not carry.
"""

import json
import random
import re
from dataclasses import dataclass

import numpy as np

from .analytics.features import CATEGORICAL, CONTEXT, Column, IDENTIFIER, NUMERIC, OUTCOME, RawTable
from .catalog import BULK, EVENT, STREAM, classify_format
from .ingest import IngestRecord
from .store import SEMI_STRUCTURED, STRUCTURED, UNSTRUCTURED
from .warehouse import SchemaColumn, WarehouseSchema

GROUP_NAMES = ("diet_controlled", "uncontrolled_hyperglycemia", "renal_complication", "cardio_complication")

DIAGNOSES = ("Circulatory", "Diabetes", "Digestive", "Genitourinary", "Injury", "Musculoskeletal", "Neoplasms", "Other", "Respiratory")

CORE_NUMERIC = (
    "age",
    "time_in_hospital",
    "num_lab_procedures",
    "num_procedures",
    "num_medications",
    "number_outpatient",
    "number_emergency",
    "number_inpatient",
    "number_diagnoses",
)

CORE_CATEGORIES = {
    "race": ("AfricanAmerican", "Asian", "Caucasian", "Hispanic", "Other"),
    "gender": ("Female", "Male"),
    "admission_type": ("Elective", "Emergency", "Newborn", "Urgent"),
    "medical_specialty": ("Cardiology", "Endocrinology", "Family", "InternalMedicine", "Nephrology", "Surgery"),
    "diag_1": DIAGNOSES,
    "diag_2": DIAGNOSES,
    "diag_3": DIAGNOSES,
    "max_glu_serum": ("None", "Norm", ">200", ">300"),
    "a1c_result": ("None", "Norm", ">7", ">8"),
    "metformin": ("Down", "No", "Steady", "Up"),
    "insulin": ("Down", "No", "Steady", "Up"),
    "diabetes_med": ("No", "Yes"),
    "change": ("Ch", "No"),
}

READMITTED_VALUES = ("NO", "<30", ">30")

LAB_NUMERIC = (
    "lab_glucose_fasting",
    "lab_glucose_post",
    "lab_hba1c_pct",
    "lab_creatinine",
    "lab_egfr",
    "lab_cholesterol_total",
    "lab_hdl",
    "lab_ldl",
    "lab_triglycerides",
    "lab_microalbumin",
    "lab_bp_systolic",
    "lab_bp_diastolic",
    "lab_bmi",
    "lab_sodium",
    "lab_potassium",
    "lab_bun",
    "lab_hemoglobin",
    "lab_crp",
    "lab_uric_acid",
    "lab_alt",
)

# Demographic, administrative, and coded-result fields: stored, cataloged,
# and pushed through ETL like everything else, but not encoded as analysis
# features on either side of the comparison. The clustering space keeps the
# quantitative measurements and the medication fields the recommender acts
# on.
CONTEXT_COLUMNS = (
    "race",
    "gender",
    "admission_type",
    "medical_specialty",
    "diag_1",
    "diag_2",
    "diag_3",
    "max_glu_serum",
    "a1c_result",
)

NOTE_NUMERIC = (
    "note_weight_kg",
    "note_hba1c_pct",
    "note_glucose_mg_dl",
    "note_bp_systolic",
    "note_egfr",
    "note_cholesterol",
)

NOTE_FLAGS = (
    "note_polyuria",
    "note_fatigue",
    "note_neuropathy",
    "note_retinopathy",
    "note_hypoglycemia",
    "note_adherence_concern",
    "note_diet_noncompliant",
    "note_exercise_reported",
    "note_smoker",
)

CSV_COLUMNS = ("patient_nbr",) + CORE_NUMERIC + tuple(CORE_CATEGORIES) + ("readmitted",)

LAKE_COLUMNS = (
    (Column("patient_nbr", IDENTIFIER),)
    + tuple(Column(name, NUMERIC) for name in CORE_NUMERIC)
    + tuple(Column(name, CONTEXT if name in CONTEXT_COLUMNS else CATEGORICAL) for name in CORE_CATEGORIES)
    + (Column("readmitted", OUTCOME),)
    + tuple(Column(name, NUMERIC) for name in LAB_NUMERIC)
    + tuple(Column(name, NUMERIC) for name in NOTE_NUMERIC)
    + tuple(Column(name, NUMERIC) for name in NOTE_FLAGS)
)

# Columns excluded from features on the warehouse side: the key, the
# outcome, and the same context fields the lake excludes.
DW_FEATURE_EXCLUDE = ("patient_nbr", "readmitted") + CONTEXT_COLUMNS


# -- archetype profiles: per-group (mean, sd) or probability -------------------

_LAB_PROFILE = {
    "lab_glucose_fasting": ((95, 6), (240, 14), (150, 9), (120, 8)),
    "lab_glucose_post": ((130, 9), (320, 18), (205, 12), (165, 11)),
    "lab_hba1c_pct": ((5.6, 0.22), (11.0, 0.4), (8.4, 0.3), (6.9, 0.28)),
    "lab_creatinine": ((0.8, 0.07), (1.0, 0.1), (3.4, 0.25), (1.2, 0.12)),
    "lab_egfr": ((95, 5), (78, 6), (26, 4), (62, 6)),
    "lab_cholesterol_total": ((165, 9), (195, 11), (205, 11), (305, 13)),
    "lab_hdl": ((56, 4), (43, 4), (41, 4), (27, 3)),
    "lab_ldl": ((92, 7), (115, 9), (122, 9), (205, 10)),
    "lab_triglycerides": ((100, 11), (195, 16), (210, 17), (330, 20)),
    "lab_microalbumin": ((10, 3), (55, 9), (250, 25), (40, 8)),
    "lab_bp_systolic": ((117, 4), (130, 5), (160, 6), (147, 5)),
    "lab_bp_diastolic": ((75, 3), (83, 3.5), (96, 4), (88, 3.5)),
    "lab_bmi": ((25.8, 1.2), (34.8, 1.6), (28.4, 1.4), (31.8, 1.4)),
    "lab_sodium": ((140, 2.0), (137, 2.2), (133, 2.2), (138, 2.1)),
    "lab_potassium": ((4.0, 0.2), (4.3, 0.25), (5.4, 0.3), (4.4, 0.25)),
    "lab_bun": ((13, 2.2), (18, 2.8), (49, 5.5), (20, 3.0)),
    "lab_hemoglobin": ((14.4, 0.7), (13.6, 0.8), (10.6, 0.7), (13.2, 0.8)),
    "lab_crp": ((1.4, 0.6), (4.6, 1.1), (6.4, 1.4), (8.8, 1.7)),
    "lab_uric_acid": ((4.7, 0.45), (5.8, 0.55), (8.3, 0.65), (6.7, 0.55)),
    "lab_alt": ((21, 4.5), (34, 6.5), (27, 5.5), (30, 6.0)),
}

_NOTE_NUMERIC_PROFILE = {
    "note_weight_kg": ((74, 5), (101, 6), (81, 5), (93, 5)),
    "note_hba1c_pct": _LAB_PROFILE["lab_hba1c_pct"],
    "note_glucose_mg_dl": _LAB_PROFILE["lab_glucose_fasting"],
    "note_bp_systolic": _LAB_PROFILE["lab_bp_systolic"],
    "note_egfr": _LAB_PROFILE["lab_egfr"],
    "note_cholesterol": _LAB_PROFILE["lab_cholesterol_total"],
}

_FLAG_PROFILE = {
    "note_polyuria": (0.03, 0.94, 0.06, 0.05),
    "note_fatigue": (0.05, 0.85, 0.72, 0.18),
    "note_neuropathy": (0.03, 0.22, 0.92, 0.08),
    "note_retinopathy": (0.02, 0.32, 0.70, 0.06),
    "note_hypoglycemia": (0.03, 0.60, 0.10, 0.05),
    "note_adherence_concern": (0.05, 0.78, 0.20, 0.15),
    "note_diet_noncompliant": (0.06, 0.70, 0.15, 0.60),
    "note_exercise_reported": (0.78, 0.06, 0.10, 0.14),
    "note_smoker": (0.06, 0.16, 0.12, 0.80),
}

_CORE_NUMERIC_PROFILE = {
    "age": ((55, 10), (50, 10), (67, 9), (64, 9)),
    "time_in_hospital": ((4, 2.2), (6, 2.4), (7, 2.4), (5.5, 2.3)),
    "num_lab_procedures": ((40, 11), (52, 12), (58, 12), (48, 11)),
    "num_procedures": ((1.5, 1.1), (2, 1.2), (2.5, 1.2), (2, 1.2)),
    "num_medications": ((10, 3.5), (15, 4.0), (14, 4.0), (13, 4.0)),
    "number_outpatient": ((1, 1.0), (1.5, 1.1), (1.8, 1.2), (1.4, 1.1)),
    "number_emergency": ((0.3, 0.6), (0.8, 0.9), (1.0, 1.0), (0.7, 0.8)),
    "number_inpatient": ((0.5, 0.8), (1.1, 1.0), (1.5, 1.1), (1.0, 0.9)),
    "number_diagnoses": ((6, 1.8), (8, 2.0), (8.5, 2.0), (7.5, 2.0)),
}

_TYPICAL_DIAG = ("Diabetes", "Diabetes", "Genitourinary", "Circulatory")
_TYPICAL_SPECIALTY = ("Family", "Endocrinology", "Nephrology", "Cardiology")

_INSULIN_DIST = (
    (("No", 0.70), ("Steady", 0.22), ("Up", 0.05), ("Down", 0.03)),
    (("No", 0.45), ("Steady", 0.33), ("Up", 0.16), ("Down", 0.06)),
    (("No", 0.60), ("Steady", 0.27), ("Up", 0.08), ("Down", 0.05)),
    (("No", 0.62), ("Steady", 0.26), ("Up", 0.07), ("Down", 0.05)),
)

_METFORMIN_DIST = (
    (("Steady", 0.50), ("No", 0.42), ("Up", 0.05), ("Down", 0.03)),
    (("Steady", 0.48), ("No", 0.38), ("Up", 0.10), ("Down", 0.04)),
    (("No", 0.72), ("Steady", 0.20), ("Up", 0.02), ("Down", 0.06)),
    (("Steady", 0.47), ("No", 0.45), ("Up", 0.05), ("Down", 0.03)),
)

_READMIT_BASE = (0.06, 0.32, 0.38, 0.26)
_CHANGE_P = (0.25, 0.50, 0.45, 0.40)


def _weighted(rng, dist):
    roll = rng.random()
    acc = 0.0
    for value, p in dist:
        acc += p
        if roll < acc:
            return value
    return dist[-1][0]


def _sample_patient(rng: random.Random, group: int, index: int) -> dict:
    p = {"patient_nbr": f"P{index:06d}"}
    for name, profile in _CORE_NUMERIC_PROFILE.items():
        mean, sd = profile[group]
        value = max(0, round(rng.gauss(mean, sd)))
        if name == "time_in_hospital":
            value = min(14, max(1, value))
        if name == "age":
            value = min(95, max(18, value))
        p[name] = value

    p["race"] = rng.choice(CORE_CATEGORIES["race"])
    p["gender"] = rng.choice(CORE_CATEGORIES["gender"])
    p["admission_type"] = _weighted(rng, (("Emergency", 0.45), ("Urgent", 0.25), ("Elective", 0.28), ("Newborn", 0.02)))
    p["medical_specialty"] = _TYPICAL_SPECIALTY[group] if rng.random() < 0.40 else rng.choice(CORE_CATEGORIES["medical_specialty"])
    p["diag_1"] = _TYPICAL_DIAG[group] if rng.random() < 0.45 else rng.choice(DIAGNOSES)
    p["diag_2"] = _TYPICAL_DIAG[group] if rng.random() < 0.30 else rng.choice(DIAGNOSES)
    p["diag_3"] = rng.choice(DIAGNOSES)

    for name, profile in _LAB_PROFILE.items():
        mean, sd = profile[group]
        p[name] = round(max(0.1, rng.gauss(mean, sd)), 1)
    for name, profile in _NOTE_NUMERIC_PROFILE.items():
        mean, sd = profile[group]
        p[name] = round(max(0.1, rng.gauss(mean, sd)), 1)
    for name, probs in _FLAG_PROFILE.items():
        p[name] = 1 if rng.random() < probs[group] else 0

    # Measured only occasionally, as in real encounter data.
    if rng.random() < 0.80:
        p["a1c_result"] = "None"
    else:
        h = p["lab_hba1c_pct"]
        p["a1c_result"] = ">8" if h > 8 else (">7" if h > 7 else "Norm")
    if rng.random() < 0.85:
        p["max_glu_serum"] = "None"
    else:
        g = p["lab_glucose_post"]
        p["max_glu_serum"] = ">300" if g > 300 else (">200" if g > 200 else "Norm")

    p["insulin"] = _weighted(rng, _INSULIN_DIST[group])
    p["metformin"] = _weighted(rng, _METFORMIN_DIST[group])
    p["diabetes_med"] = "Yes" if (p["insulin"] != "No" or p["metformin"] != "No" or rng.random() < 0.3) else "No"
    p["change"] = "Ch" if rng.random() < _CHANGE_P[group] else "No"

    # Outcome: archetype base risk, worsened by a poorly chosen regimen.
    risk = _READMIT_BASE[group]
    if group == 2 and p["metformin"] != "No":
        risk += 0.30
    if group == 1 and p["insulin"] == "No":
        risk += 0.30
    if rng.random() < min(0.9, risk):
        p["readmitted"] = "<30" if rng.random() < 0.6 else ">30"
    else:
        p["readmitted"] = "NO"
    return p


# -- renderers -----------------------------------------------------------------


def render_structured(p: dict) -> bytes:
    header = ",".join(CSV_COLUMNS)
    row = ",".join(str(p[c]) for c in CSV_COLUMNS)
    return f"{header}\n{row}\n".encode("utf-8")


def render_semi(p: dict) -> bytes:
    doc = {
        "patient": {c: p[c] for c in CSV_COLUMNS},
        "labs": {name[len("lab_"):]: p[name] for name in LAB_NUMERIC},
    }
    return json.dumps(doc).encode("utf-8")


_FLAG_SENTENCES = {
    "note_polyuria": "Reports polyuria.",
    "note_fatigue": "Reports fatigue.",
    "note_neuropathy": "Neuropathy symptoms present.",
    "note_retinopathy": "Retinopathy noted on exam.",
    "note_hypoglycemia": "Episodes of hypoglycemia reported.",
    "note_adherence_concern": "Adherence concern noted.",
    "note_diet_noncompliant": "Diet noncompliance discussed.",
    "note_exercise_reported": "Exercises regularly.",
    "note_smoker": "Current smoker.",
}


def render_note(p: dict) -> bytes:
    lines = [
        f"Progress note for patient {p['patient_nbr']}.",
        f"{p['age']}-year-old {p['gender'].lower()} seen for diabetes follow-up.",
        f"Weight {p['note_weight_kg']} kg. HbA1c {p['note_hba1c_pct']} percent. "
        f"Fasting glucose {p['note_glucose_mg_dl']} mg/dL.",
        f"Systolic BP {p['note_bp_systolic']} mmHg. eGFR {p['note_egfr']} mL/min. "
        f"Total cholesterol {p['note_cholesterol']} mg/dL.",
    ]
    for name in NOTE_FLAGS:
        if p[name]:
            lines.append(_FLAG_SENTENCES[name])
    if p["readmitted"] == "NO":
        lines.append("No readmission within 30 days.")
    elif p["readmitted"] == "<30":
        lines.append("Readmitted within 30 days of discharge.")
    else:
        lines.append("Readmitted more than 30 days after discharge.")
    return "\n".join(lines).encode("utf-8")


# -- corpus --------------------------------------------------------------------


@dataclass(frozen=True)
class Corpus:
    records: tuple
    group_labels: tuple
    seed: int
    composition: tuple

    @property
    def n(self) -> int:
        return len(self.records)


def gen_corpus(n: int, seed: int, composition=(0.2, 0.5, 0.3), groups: int = 4) -> Corpus:
    """Deterministic corpus of n single-patient records."""
    if n < 100:
        raise ValueError("corpus needs at least 100 records")
    if len(composition) != 3 or any(f < 0 for f in composition) or abs(sum(composition) - 1.0) > 1e-9:
        raise ValueError("composition must be three non-negative fractions summing to 1")
    if not 1 <= groups <= len(GROUP_NAMES):
        raise ValueError(f"groups must be in 1..{len(GROUP_NAMES)}")
    rng = random.Random(seed)
    n_structured = int(round(composition[0] * n))
    n_semi = min(int(round(composition[1] * n)), n - n_structured)
    n_note = n - n_structured - n_semi
    kinds = ["structured"] * n_structured + ["semi"] * n_semi + ["note"] * n_note
    rng.shuffle(kinds)

    records = []
    labels = []
    for i, kind in enumerate(kinds):
        group = rng.randrange(groups)
        patient = _sample_patient(rng, group, i)
        labels.append(group)
        if kind == "structured":
            records.append(IngestRecord(render_structured(patient), BULK, "emr-batch"))
        elif kind == "semi":
            records.append(IngestRecord(render_semi(patient), STREAM, "lab-feed"))
        else:
            records.append(IngestRecord(render_note(patient), EVENT, "clinical-notes"))
    return Corpus(tuple(records), tuple(labels), seed, tuple(composition))


# -- schema-on-read readers ------------------------------------------------------


def parse_structured(payload: bytes) -> dict:
    lines = payload.decode("utf-8").splitlines()
    header = lines[0].split(",")
    values = lines[1].split(",") if len(lines) > 1 else []
    row = {}
    for name, value in zip(header, values):
        if name in CORE_NUMERIC:
            try:
                row[name] = float(value)
            except ValueError:
                row[name] = None
        else:
            row[name] = value if value != "" else None
    return row


def parse_semi(payload: bytes) -> dict:
    doc = json.loads(payload.decode("utf-8"))
    row = {}
    for name, value in doc.get("patient", {}).items():
        row[name] = float(value) if name in CORE_NUMERIC else value
    for name, value in doc.get("labs", {}).items():
        row[f"lab_{name}"] = float(value)
    return row


_AGE_GENDER_RE = re.compile(r"(\d+)-year-old (male|female)")
_WEIGHT_RE = re.compile(r"Weight ([\d.]+) kg")
_HBA1C_RE = re.compile(r"HbA1c ([\d.]+) percent")
_GLUCOSE_RE = re.compile(r"Fasting glucose ([\d.]+) mg/dL")
_BP_RE = re.compile(r"Systolic BP ([\d.]+) mmHg")
_EGFR_RE = re.compile(r"eGFR ([\d.]+) mL/min")
_CHOLESTEROL_RE = re.compile(r"Total cholesterol ([\d.]+) mg/dL")


def parse_note(payload: bytes) -> dict:
    text = payload.decode("utf-8", errors="replace")
    row = {}
    m = _AGE_GENDER_RE.search(text)
    if m:
        row["age"] = float(m.group(1))
        row["gender"] = m.group(2).capitalize()
    m = _WEIGHT_RE.search(text)
    if m:
        row["note_weight_kg"] = float(m.group(1))
    m = _HBA1C_RE.search(text)
    if m:
        row["note_hba1c_pct"] = float(m.group(1))
    m = _GLUCOSE_RE.search(text)
    if m:
        row["note_glucose_mg_dl"] = float(m.group(1))
    m = _BP_RE.search(text)
    if m:
        row["note_bp_systolic"] = float(m.group(1))
    m = _EGFR_RE.search(text)
    if m:
        row["note_egfr"] = float(m.group(1))
    m = _CHOLESTEROL_RE.search(text)
    if m:
        row["note_cholesterol"] = float(m.group(1))
    for name, sentence in _FLAG_SENTENCES.items():
        row[name] = 1.0 if sentence in text else 0.0
    if "Readmitted within 30 days" in text:
        row["readmitted"] = "<30"
    elif "Readmitted more than 30 days" in text:
        row["readmitted"] = ">30"
    elif "No readmission" in text:
        row["readmitted"] = "NO"
    return row


def record_row(payload: bytes, format_class: str = None) -> dict:
    """Bind the unified schema to one raw payload at read time."""
    format_class = format_class or classify_format(payload)
    if format_class == STRUCTURED:
        return parse_structured(payload)
    if format_class == SEMI_STRUCTURED:
        return parse_semi(payload)
    return parse_note(payload)


def lake_table(payloads_with_formats) -> RawTable:
    """RawTable over the unified column set from (payload, format) pairs."""
    rows = [record_row(payload, fmt) for payload, fmt in payloads_with_formats]
    return RawTable(LAKE_COLUMNS, rows)


def corpus_table(corpus: Corpus) -> RawTable:
    return lake_table((r.payload, None) for r in corpus.records)


def outcome_labels(table: RawTable) -> np.ndarray:
    """Binary treatment-success label: +1 when the patient was not
    readmitted, -1 otherwise."""
    return np.array([1.0 if row.get("readmitted") == "NO" else -1.0 for row in table.rows])


def default_warehouse_schema() -> WarehouseSchema:
    """The fixed encounter schema the baseline warehouse loads into: core
    columns only, no lab panel and no note-derived fields."""
    columns = [SchemaColumn("patient_nbr", "categorical")]
    for name in CORE_NUMERIC:
        columns.append(SchemaColumn(name, "integer"))
    for name, cats in CORE_CATEGORIES.items():
        columns.append(SchemaColumn(name, "categorical", tuple(cats)))
    columns.append(SchemaColumn("readmitted", "categorical", READMITTED_VALUES))
    return WarehouseSchema(tuple(columns), strict=True)
