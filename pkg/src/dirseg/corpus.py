"""Corpus file parsing/serialization and the JSON model/prior file formats.

Corpus text format, one record per blank-line-separated block:

    > record-id
    acba            (observation line; comma-separated when any symbol
                     has more than one character)
    1,1,2,2         (state line, comma-separated 1-based integers)

States are 1-based in files and reports, 0-based in memory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .model import DataError, HyperParams, ModelSpec, ParamMatrices
from .priors import EmpiricalSummary

PRIORS_SCHEMA = "dirseg-priors/1"
MODEL_SCHEMA = "dirseg-model/1"


@dataclass(frozen=True)
class Record:
    id: str
    obs: np.ndarray
    states: np.ndarray


def _symbol_table(alphabet) -> dict[str, int]:
    return {sym: i for i, sym in enumerate(alphabet)}


def parse_corpus(text: str, alphabet, K: int) -> list[Record]:
    """Parse corpus text; raises DataError naming the record and line."""
    table = _symbol_table(alphabet)
    multi = any(len(sym) > 1 for sym in alphabet)
    records = []
    block: list[tuple[int, str]] = []
    lines = text.splitlines()
    for lineno, raw in enumerate(lines + [""], start=1):
        line = raw.strip()
        if line:
            block.append((lineno, line))
            continue
        if not block:
            continue
        records.append(_parse_block(block, table, multi, K))
        block = []
    return records


def _parse_block(block, table, multi, K) -> Record:
    first_line, header = block[0]
    if not header.startswith(">"):
        raise DataError(f"line {first_line}: record must start with a '>' id line")
    rid = header[1:].strip()
    if len(block) != 3:
        raise DataError(f"record {rid!r} (line {first_line}): expected exactly "
                        "an id line, an observation line and a state line")
    obs_line_no, obs_line = block[1]
    state_line_no, state_line = block[2]
    symbols = obs_line.split(",") if multi else list(obs_line)
    try:
        obs = np.array([table[sym] for sym in symbols], dtype=np.int64)
    except KeyError as exc:
        raise DataError(f"record {rid!r} (line {obs_line_no}): "
                        f"symbol {exc.args[0]!r} not in the alphabet") from None
    try:
        states = np.array([int(v) - 1 for v in state_line.split(",")], dtype=np.int64)
    except ValueError:
        raise DataError(f"record {rid!r} (line {state_line_no}): "
                        "state line must be comma-separated integers") from None
    if states.size != obs.size:
        raise DataError(f"record {rid!r}: observation and state lines differ in length")
    if states.size == 0:
        raise DataError(f"record {rid!r}: empty record")
    if states.min() < 0 or states.max() >= K:
        raise DataError(f"record {rid!r} (line {state_line_no}): "
                        f"states must be in 1..{K}")
    return Record(id=rid, obs=obs, states=states)


def serialize_corpus(records, alphabet) -> str:
    multi = any(len(sym) > 1 for sym in alphabet)
    sep = "," if multi else ""
    chunks = []
    for rec in records:
        obs_line = sep.join(alphabet[i] for i in rec.obs)
        state_line = ",".join(str(int(v) + 1) for v in rec.states)
        chunks.append(f"> {rec.id}\n{obs_line}\n{state_line}\n")
    return "\n".join(chunks)


def read_corpus(path, alphabet, K: int) -> list[Record]:
    with open(path, encoding="utf-8") as fh:
        return parse_corpus(fh.read(), alphabet, K)


def write_corpus(path, records, alphabet) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_corpus(records, alphabet))


def pairs(records) -> list[tuple[np.ndarray, np.ndarray]]:
    return [(rec.obs, rec.states) for rec in records]


def start_state_frequencies(records, K: int) -> np.ndarray:
    counts = np.bincount([int(rec.states[0]) for rec in records], minlength=K)
    return counts / counts.sum()


# -- model JSON -------------------------------------------------------------

def write_model_json(path, spec: ModelSpec, theta: ParamMatrices | None = None,
                     hp: HyperParams | None = None) -> None:
    doc = {
        "schema": MODEL_SCHEMA,
        "K": spec.K,
        "alphabet": list(spec.alphabet),
        "p0": spec.p0.tolist(),
        "trans_mask": spec.trans_mask.astype(int).tolist(),
        "emit_mask": spec.emit_mask.astype(int).tolist(),
    }
    if theta is not None:
        doc["trans"] = theta.trans.tolist()
        doc["emit"] = theta.emit.tolist()
    if hp is not None:
        doc["alpha"] = hp.alpha.tolist()
        doc["beta"] = hp.beta.tolist()
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model_json(path):
    """Returns (spec, theta or None, hyperparams or None)."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema") != MODEL_SCHEMA:
        raise DataError(f"{path}: expected schema {MODEL_SCHEMA!r}")
    spec = ModelSpec(K=int(doc["K"]), alphabet=tuple(doc["alphabet"]),
                     p0=np.array(doc["p0"], dtype=float),
                     trans_mask=np.array(doc["trans_mask"], dtype=bool),
                     emit_mask=np.array(doc["emit_mask"], dtype=bool))
    theta = None
    if "trans" in doc:
        theta = ParamMatrices.checked(np.array(doc["trans"], dtype=float),
                                      np.array(doc["emit"], dtype=float), spec)
    hp = None
    if "alpha" in doc:
        hp = HyperParams(alpha=np.array(doc["alpha"], dtype=float),
                         beta=np.array(doc["beta"], dtype=float)).validate(spec)
    return spec, theta, hp


# -- priors JSON ------------------------------------------------------------

def write_priors_json(path, spec: ModelSpec, summary: EmpiricalSummary,
                      provenance: dict | None = None) -> None:
    doc = {
        "schema": PRIORS_SCHEMA,
        **(provenance or {}),
        "K": spec.K,
        "alphabet": list(spec.alphabet),
        "p0": spec.p0.tolist(),
        "trans_mask": spec.trans_mask.astype(int).tolist(),
        "emit_mask": spec.emit_mask.astype(int).tolist(),
        "trans_counts": summary.trans_counts.tolist(),
        "emit_counts": summary.emit_counts.tolist(),
        "p_star": summary.p_star.tolist(),
        "q_star": summary.q_star.tolist(),
        "p_hat": summary.p_hat.tolist(),
        "q_hat": summary.q_hat.tolist(),
        "var_trans": summary.var_trans.tolist(),
        "var_emit": summary.var_emit.tolist(),
        "N": summary.N.tolist(),
        "M": summary.M.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_priors_json(path):
    """Returns (spec, summary)."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema") != PRIORS_SCHEMA:
        raise DataError(f"{path}: expected schema {PRIORS_SCHEMA!r}")
    spec = ModelSpec(K=int(doc["K"]), alphabet=tuple(doc["alphabet"]),
                     p0=np.array(doc["p0"], dtype=float),
                     trans_mask=np.array(doc["trans_mask"], dtype=bool),
                     emit_mask=np.array(doc["emit_mask"], dtype=bool))
    summary = EmpiricalSummary(
        trans_counts=np.array(doc["trans_counts"], dtype=np.int64),
        emit_counts=np.array(doc["emit_counts"], dtype=np.int64),
        p_star=np.array(doc["p_star"], dtype=float),
        q_star=np.array(doc["q_star"], dtype=float),
        p_hat=np.array(doc["p_hat"], dtype=float),
        q_hat=np.array(doc["q_hat"], dtype=float),
        var_trans=np.array(doc["var_trans"], dtype=float),
        var_emit=np.array(doc["var_emit"], dtype=float),
        N=np.array(doc["N"], dtype=float),
        M=np.array(doc["M"], dtype=float),
    )
    return spec, summary
