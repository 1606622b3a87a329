"""Experiment drivers behind the CLI subcommands.

Each driver takes a parsed RunConfig plus effective seed/output directory and
writes machine-readable CSV next to an aligned text report.  Reports embed the
config digest, the seed and the kernel backend; they carry no timestamps, so a
fixed seed reproduces them byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, resolve_expression
from .corpus import (
    Record,
    load_model_json,
    load_priors_json,
    pairs,
    read_corpus,
    start_state_frequencies,
    write_corpus,
    write_priors_json,
)
from .engine import baum_welch, sample_posterior_path, viterbi
from .evaluation import path_stats, relative_sums
from .kernels import BACKEND
from .likelihood import log_joint
from .model import DataError, ModelSpec, ParamMatrices, count_path, derive_masks
from .priors import (
    EmpiricalSummary,
    assemble_hyperparams,
    empirical_hyperparams,
    min_positive_ratio_inverse,
    mle_matrices,
    posterior_mean_c,
    summarize_corpus,
    uniform_matrices,
)
from .segmentation import NotApplicableError, SegConfig, multistart
from .synthetic import sample_corpus

BAYES_METHODS = ("sem", "smm", "bem", "vb")


def _as_seedseq(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def config_digest(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()[:16]


def _header(digest: str, seed: int) -> str:
    return (f"# dirseg report\n# config_sha256={digest}\n"
            f"# seed={seed}\n# backend={BACKEND}\n")


def _csv_comment(digest: str, seed: int) -> str:
    return f"# config_sha256={digest} seed={seed} backend={BACKEND}\n"


def _parse_p0(cfg: RunConfig, records, K: int) -> np.ndarray:
    if cfg.p0.strip().lower() == "estimate":
        if not records:
            raise ConfigError("p0=estimate needs a training corpus")
        return start_state_frequencies(records, K)
    try:
        vals = np.array([float(v) for v in cfg.p0.split(",")], dtype=float)
    except ValueError:
        raise ConfigError(f"cannot parse p0 value {cfg.p0!r}") from None
    return vals


def _require(cfg: RunConfig, *names: str) -> None:
    for name in names:
        if not getattr(cfg, name):
            raise ConfigError(f"config is missing required value {name!r}")


def model_context(cfg: RunConfig):
    """(spec, summary, train records): from a priors file when given, else
    computed from the training corpus."""
    if cfg.priors:
        spec, summary = load_priors_json(cfg.priors)
        return spec, summary, []
    _require(cfg, "train", "K", "alphabet")
    records = read_corpus(cfg.train, cfg.alphabet, cfg.K)
    if not records:
        raise DataError(f"training corpus {cfg.train} has no records")
    trans_mask, emit_mask = derive_masks(pairs(records), cfg.K, cfg.alphabet)
    p0 = _parse_p0(cfg, records, cfg.K)
    spec = ModelSpec(K=cfg.K, alphabet=cfg.alphabet, p0=p0,
                     trans_mask=trans_mask, emit_mask=emit_mask)
    summary = summarize_corpus(pairs(records), spec, floor=cfg.floor, cap=cfg.cap)
    return spec, summary, records


def hyperparams_for_sequence(cfg: RunConfig, spec: ModelSpec,
                             summary: EmpiricalSummary, n: int):
    """Empirical hyperparameters, or the override grid resolved against the
    sequence length and the applicability thresholds."""
    if cfg.prior_mode == "empirical":
        return empirical_hyperparams(summary, spec)
    context = {
        "n": float(n),
        "N1": min_positive_ratio_inverse(summary.p_hat),
        "M1": min_positive_ratio_inverse(summary.q_hat),
    }
    n_val = resolve_expression(cfg.n_override, **context)
    m_val = resolve_expression(cfg.m_override, **context)
    return assemble_hyperparams(summary.p_star, summary.q_star, n_val, m_val, spec)


# -- estimate-priors ----------------------------------------------------------


def estimate_priors(cfg: RunConfig, out_dir: Path, digest: str, seed: int) -> list[Path]:
    if cfg.priors:
        raise ConfigError("estimate-priors computes a priors file; "
                          "remove paths.priors from the config")
    spec, summary, _ = model_context(cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "priors.json"
    write_priors_json(json_path, spec, summary,
                      provenance={"config_sha256": digest, "seed": seed,
                                  "backend": BACKEND})
    txt_path = out_dir / "priors.txt"
    with open(txt_path, "w", encoding="utf-8") as fh:
        fh.write(_header(digest, seed))
        fh.write("\nConcentration parameters\n")
        head = "".join(f"{f'N_{i+1}':>12}" for i in range(spec.K))
        head += "".join(f"{f'M_{i+1}':>12}" for i in range(spec.K))
        fh.write(head + "\n")
        row = "".join(f"{v:12.4f}" for v in summary.N)
        row += "".join(f"{v:12.4f}" for v in summary.M)
        fh.write(row + "\n")
        fh.write("\nPer-state row structure\n")
        fh.write(f"{'state':>6}{'K_i':>6}{'L_i':>6}{'n_i':>10}{'m_i':>10}"
                 f"{'sumVt':>14}{'sumVe':>14}\n")
        for i in range(spec.K):
            fh.write(f"{i+1:>6}{spec.trans_row_sizes[i]:>6}{spec.emit_row_sizes[i]:>6}"
                     f"{summary.trans_counts[i].sum():>10}{summary.emit_counts[i].sum():>10}"
                     f"{summary.var_trans[i].sum():>14.6e}{summary.var_emit[i].sum():>14.6e}\n")
        fh.write("\nApplicability thresholds (1 / smallest positive ratio)\n")
        fh.write(f"N1 = {min_positive_ratio_inverse(summary.p_hat)!r}\n")
        fh.write(f"M1 = {min_positive_ratio_inverse(summary.q_hat)!r}\n")
    return [json_path, txt_path]


# -- segment ------------------------------------------------------------------


def _em_baseline(x, spec: ModelSpec, theta_train: ParamMatrices | None,
                 n_starts: int, seed) -> np.ndarray:
    """No-training-data baseline: EM fits from several initial parameter
    guesses, keeping the fit with the best final log-likelihood, then Viterbi.

    Initial guesses are add-one smoothed count matrices of posterior-sampled
    paths (plus the training point estimates when available).
    """
    sampling_theta = theta_train if theta_train is not None else uniform_matrices(spec)
    seeds = _as_seedseq(seed).spawn(n_starts)
    candidates = []
    for sd in seeds:
        path0 = sample_posterior_path(x, sampling_theta, None, spec, sd)
        counts = count_path(path0, x, spec)
        trans = np.where(spec.trans_mask,
                         (counts.trans + 1) / (counts.trans_row_sums
                                               + spec.trans_row_sizes)[:, None], 0.0)
        emit = np.where(spec.emit_mask,
                        (counts.emit + 1) / (counts.emit_row_sums
                                             + spec.emit_row_sizes)[:, None], 0.0)
        candidates.append(ParamMatrices.checked(trans, emit, spec))
    if theta_train is not None:
        candidates.append(theta_train)
    best_theta, best_ll = None, -np.inf
    for theta0 in candidates:
        try:
            theta_fit, ll = baum_welch(x, theta0, spec)
        except DataError:
            continue
        if ll > best_ll:
            best_theta, best_ll = theta_fit, ll
    if best_theta is None:
        raise DataError("every EM start failed on this sequence")
    return viterbi(x, best_theta, None, spec)


def _segment_record(rec: Record, cfg: RunConfig, spec: ModelSpec,
                    summary: EmpiricalSummary, seed) -> list[dict]:
    x = rec.obs
    hp = hyperparams_for_sequence(cfg, spec, summary, x.size)
    theta_mle = mle_matrices(summary, spec)
    init_models = [theta_mle, uniform_matrices(spec)]
    rows = []
    child = _as_seedseq(seed)
    for method in cfg.methods:
        row = {"id": rec.id, "n": x.size, "method": method}
        try:
            if method == "viterbi":
                path = viterbi(x, theta_mle, None, spec)
                value, distinct, iters = log_joint(path, x, hp, spec), 1, 1
            elif method == "em":
                path = _em_baseline(x, spec, theta_mle, cfg.n_initial, child)
                value, distinct, iters = log_joint(path, x, hp, spec), 1, 1
            else:
                seg = SegConfig(method=method, max_iter=cfg.max_iter,
                                n_initial=cfg.n_initial, rng_seed=0,
                                applicability_mode=cfg.applicability)
                res = multistart(x, hp, spec, seg, init_models=init_models,
                                 init_paths=_sampled_starts(x, init_models, spec,
                                                            cfg.n_initial, child))
                path, value = res.best_path, res.best_logjoint
                distinct, iters = res.distinct_outputs, res.iterations_of_best
        except NotApplicableError:
            row.update(value="na", distinct="", iterations="", blocks="",
                       entropy="", state_freq="", path="")
            rows.append(row)
            continue
        stats = path_stats(path, x, spec, ref=rec.states)
        row.update(
            value=repr(float(value)), distinct=distinct, iterations=iters,
            blocks=stats.block_count, entropy=repr(stats.entropy),
            hamming_to_true=stats.hamming_to_ref,
            state_freq="|".join(str(int(v)) for v in stats.state_freq),
            path=",".join(str(int(v) + 1) for v in path),
        )
        rows.append(row)
    return rows


def _sampled_starts(x, init_models, spec, n_initial, seed_seq) -> list[np.ndarray]:
    seeds = seed_seq.spawn(n_initial)
    return [sample_posterior_path(x, init_models[k % len(init_models)], None, spec, seeds[k])
            for k in range(n_initial)]


_SEGMENT_FIELDS = ("id", "n", "method", "value", "distinct", "iterations",
                   "blocks", "entropy", "hamming_to_true", "state_freq", "path")


def segment(cfg: RunConfig, out_dir: Path, digest: str, seed: int,
            jobs: int = 1) -> list[Path]:
    spec, summary, _ = model_context(cfg)
    _require(cfg, "test")
    test = read_corpus(cfg.test, spec.alphabet, spec.K)
    seeds = _as_seedseq(seed).spawn(len(test))

    def work(item):
        idx, rec = item
        try:
            return _segment_record(rec, cfg, spec, summary, seeds[idx])
        except DataError as exc:
            return [{"id": rec.id, "n": rec.obs.size, "method": "error",
                     "value": str(exc)}]

    rows = []
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for chunk in pool.map(work, enumerate(test)):
                rows.extend(chunk)
    else:
        for item in enumerate(test):
            rows.extend(work(item))

    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "segment.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        fh.write(_csv_comment(digest, seed))
        writer = csv.DictWriter(fh, fieldnames=_SEGMENT_FIELDS, extrasaction="ignore",
                                restval="")
        writer.writeheader()
        writer.writerows(rows)
    txt_path = out_dir / "segment.txt"
    with open(txt_path, "w", encoding="utf-8") as fh:
        fh.write(_header(digest, seed))
        fh.write(f"\n{'id':>10} {'n':>6} {'method':>8} {'ln p(v,x)':>14} "
                 f"{'(distinct)':>10} {'[iters]':>8} {'blocks':>7} {'entropy':>9}\n")
        for row in rows:
            if row["method"] == "error":
                fh.write(f"{row['id']:>10} {row['n']:>6} {'error':>8} {row['value']}\n")
                continue
            value = row["value"]
            vtxt = "na" if value == "na" else f"{float(value):.2f}"
            btxt = "" if row["blocks"] == "" else str(row["blocks"])
            etxt = "" if row["entropy"] == "" else f"{float(row['entropy']):.3f}"
            fh.write(f"{row['id']:>10} {row['n']:>6} {row['method']:>8} {vtxt:>14} "
                     f"({row['distinct']!s:>8}) {row['iterations']!s:>8} "
                     f"{btxt:>7} {etxt:>9}\n")
    return [csv_path, txt_path]


# -- compare ------------------------------------------------------------------


def _compare_paths(cfg: RunConfig, spec, summary, test, seed, jobs):
    from .segmentation import check_applicability

    theta_mle = mle_matrices(summary, spec)
    init_models = [theta_mle, uniform_matrices(spec)]
    hp = empirical_hyperparams(summary, spec)
    methods = []
    not_applicable = []
    for m in cfg.methods:
        if m in ("smm", "bem"):
            try:
                check_applicability(hp, spec, "strict")
            except NotApplicableError:
                not_applicable.append(m)
                continue
        methods.append(m)
    seeds = _as_seedseq(seed).spawn(len(test))

    def work(item):
        idx, rec = item
        x = rec.obs
        child = seeds[idx]
        out = {}
        for method in methods:
            if method == "viterbi":
                out[method] = viterbi(x, theta_mle, None, spec)
            elif method == "em":
                out[method] = _em_baseline(x, spec, theta_mle, cfg.n_initial, child)
            else:
                seg = SegConfig(method=method, max_iter=cfg.max_iter,
                                n_initial=cfg.n_initial, rng_seed=0,
                                applicability_mode=cfg.applicability)
                res = multistart(x, hp, spec, seg, init_models=init_models,
                                 init_paths=_sampled_starts(x, init_models, spec,
                                                            cfg.n_initial, child))
                out[method] = res.best_path
        return out

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, enumerate(test)))
    else:
        results = [work(item) for item in enumerate(test)]
    return {m: [r[m] for r in results] for m in methods}, not_applicable


def compare(cfg: RunConfig, out_dir: Path, digest: str, seed: int,
            jobs: int = 1) -> list[Path]:
    spec, summary, _ = model_context(cfg)
    _require(cfg, "test")
    test = read_corpus(cfg.test, spec.alphabet, spec.K)
    method_paths, not_applicable = _compare_paths(cfg, spec, summary, test, seed, jobs)
    if not method_paths:
        raise DataError("no applicable method left to compare")

    targets_by_c: dict[float, list] = {}
    thetas_by_c: dict[float, list] = {}
    for c in cfg.c_values:
        thetas = [posterior_mean_c(summary, (rec.obs, rec.states), c, spec)
                  for rec in test]
        targets = [viterbi(rec.obs, theta, None, spec)
                   for rec, theta in zip(test, thetas)]
        thetas_by_c[c] = thetas
        targets_by_c[c] = targets

    observations = [rec.obs for rec in test]
    table = relative_sums(method_paths, targets_by_c, thetas_by_c, observations, spec)

    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, mat in (("compare_relsum", table.rel_sum),
                      ("compare_meanrel", table.mean_rel)):
        p = out_dir / f"{name}.csv"
        with open(p, "w", newline="", encoding="utf-8") as fh:
            fh.write(_csv_comment(digest, seed))
            writer = csv.writer(fh)
            writer.writerow(["c"] + list(table.methods))
            for jc, c in enumerate(table.c_values):
                writer.writerow([repr(c)] + [repr(float(v)) for v in mat[:, jc]])
        paths.append(p)

    txt = out_dir / "compare.txt"
    with open(txt, "w", encoding="utf-8") as fh:
        fh.write(_header(digest, seed))
        for title, mat, fmt in (("Relative sums (percent of target)", table.rel_sum, "{:14.4f}"),
                                ("Mean relative scores", table.mean_rel, "{:14.4f}")):
            fh.write(f"\n{title}\n")
            fh.write(f"{'c':>10}" + "".join(f"{m:>14}" for m in table.methods) + "\n")
            for jc, c in enumerate(table.c_values):
                fh.write(f"{c:>10g}" + "".join(fmt.format(v) for v in mat[:, jc]) + "\n")
        if not_applicable:
            fh.write("\nNot applicable under these hyperparameters (below 1 on a "
                     f"possible cell): {', '.join(not_applicable)}\n")
        fh.write("\nConstant-path counts per method\n")
        for m in table.methods:
            const = [p for p in method_paths[m] if np.unique(p).size == 1]
            states = sorted({int(p[0]) + 1 for p in const})
            fh.write(f"{m:>10}: {len(const)} of {len(test)}"
                     + (f" (states {states})" if const else "") + "\n")
        if "sem" in method_paths and "vb" in method_paths:
            agree = sum(np.array_equal(a, b) for a, b in
                        zip(method_paths["sem"], method_paths["vb"]))
            fh.write(f"\nsem and vb agree on {agree} of {len(test)} sequences\n")
    paths.append(txt)
    return paths


# -- sample -------------------------------------------------------------------


def sample(cfg: RunConfig, out_file: Path, seed: int) -> Path:
    _require(cfg, "sample_model", "n_pairs")
    if cfg.length_min < 1 or cfg.length_max < cfg.length_min:
        raise ConfigError("sample needs length >= 1 (or a valid length_min/length_max)")
    spec, theta, hp = load_model_json(cfg.sample_model)
    len_seed, corpus_seed = _as_seedseq(seed).spawn(2)
    rng = np.random.default_rng(len_seed)
    lengths = rng.integers(cfg.length_min, cfg.length_max + 1, size=cfg.n_pairs)
    corpus = sample_corpus(spec, lengths, corpus_seed, mode=cfg.sample_mode,
                           theta=theta, hp=hp)
    records = [Record(id=f"r{k:05d}", obs=x, states=s)
               for k, (x, s) in enumerate(corpus)]
    out_file.parent.mkdir(parents=True, exist_ok=True)
    write_corpus(out_file, records, spec.alphabet)
    return out_file


# -- stats --------------------------------------------------------------------


def stats(cfg: RunConfig, corpus_path: str, out_dir: Path, digest: str,
          seed: int) -> list[Path]:
    _require(cfg, "K", "alphabet")
    records = read_corpus(corpus_path, cfg.alphabet, cfg.K)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "stats.csv"
    trans_mask = np.ones((cfg.K, cfg.K), dtype=bool)
    emit_mask = np.ones((cfg.K, len(cfg.alphabet)), dtype=bool)
    spec = ModelSpec(K=cfg.K, alphabet=cfg.alphabet,
                     p0=np.full(cfg.K, 1.0 / cfg.K),
                     trans_mask=trans_mask, emit_mask=emit_mask)
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        fh.write(_csv_comment(digest, seed))
        writer = csv.writer(fh)
        writer.writerow(["id", "n", "blocks", "entropy"]
                        + [f"state_{i+1}" for i in range(cfg.K)])
        for rec in records:
            st = path_stats(rec.states, rec.obs, spec)
            writer.writerow([rec.id, rec.obs.size, st.block_count, repr(st.entropy)]
                            + [int(v) for v in st.state_freq])
    return [csv_path]
