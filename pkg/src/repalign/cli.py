"""Command-line entry point: ``repalign <command> [options]``.

Every command writes a long-format CSV plus a JSON mirror into ``--out-dir``.
Options can also come from a ``key = value`` file given with ``--config``;
flags on the command line take precedence.

Exit codes: 0 success, 1 input or usage error, 2 certification failure.
"""
from __future__ import annotations

import argparse
import itertools
import logging
import math
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import io
from .analysis import (
    RidgeDecomposition,
    build_spec_features,
    debias,
    reference_specs,
    sliding_window_trend,
)
from .exceptions import AlignmentError
from .matching import permutation_null
from .metrics import MetricId, subsampled_alignment
from .sae import (
    SaeConfig,
    encode_codes,
    filter_features,
    incoherence_stats,
    magnitude_stats,
    residual_stats,
    sae_train,
)
from .statmodel import CERTIFY_CONFIG, SyntheticConfig, certify, generate_dictionary

logger = logging.getLogger("repalign")

EXIT_OK, EXIT_ERROR, EXIT_CERT_FAIL = 0, 1, 2
DEFAULT_METRICS = ["knn_overlap:10"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- shared helpers --------------------------------------------------------------

def _metrics(args) -> list[MetricId]:
    return [MetricId.parse(m) for m in (args.metric or DEFAULT_METRICS)]


def _config_of(args) -> dict:
    skip = {"func", "out_dir", "config", "verbose"}
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items()) if k not in skip}


def _load_models(manifest: io.Manifest, names=None):
    subset = io.read_row_subset(manifest.row_subset_path) if manifest.row_subset_path else None
    out = {}
    for entry in manifest.models:
        if names is not None and entry.name not in names:
            continue
        m = io.load_embeddings(entry.embedding_path)
        if subset is not None:
            if subset.size and subset.max() >= m.shape[0]:
                raise AlignmentError(f"{manifest.row_subset_path}: index {subset.max()} out of range for {entry.name}")
            m = m[subset]
        out[entry.name] = m
    return out, subset


def _sparse_view(codes: sp.csr_matrix, upper: float, lower: float) -> np.ndarray:
    """Filtered codes with nonzero rows scaled to unit norm (zero rows stay zero)."""
    kept = filter_features(codes, upper, lower).kept
    dense = codes[:, kept].toarray()
    norms = np.linalg.norm(dense, axis=1, keepdims=True)
    return np.divide(dense, norms, out=np.zeros_like(dense), where=norms > 0)


def _codes_for(manifest: io.Manifest, entry, data) -> sp.csr_matrix:
    params, k = io.read_sae(manifest.sae_path(entry))
    return encode_codes(params, data, entry.sae_k or k)


def _variant_views(manifest, reps, variant, args):
    if variant == "raw":
        return reps
    if variant == "debiased":
        return {name: debias(m) for name, m in reps.items()}
    return {entry.name: _sparse_view(_codes_for(manifest, entry, reps[entry.name]),
                                     args.filter_upper, args.filter_lower)
            for entry in manifest.models if entry.name in reps}


# -- commands ----------------------------------------------------------------------

def cmd_align(args) -> int:
    manifest = io.load_manifest(args.manifest)
    reps, _ = _load_models(manifest)
    views = _variant_views(manifest, reps, args.variant, args)
    metrics = _metrics(args)
    rows, summary = [], []
    names = [m.name for m in manifest.models]
    for a, b in itertools.combinations(names, 2):
        for metric in metrics:
            report = subsampled_alignment(views[a], views[b], metric, args.sample_size,
                                          args.n_samples, args.seed)
            for i, v in enumerate(report.values):
                rows.append({"model_a": a, "model_b": b, "metric": str(metric), "sample": i, "value": v})
            summary.append({"model_a": a, "model_b": b, "metric": str(metric), "mean": report.mean,
                            "std": report.std, "n_points": report.n_points})
    io.write_report(args.out_dir, "align", rows, {"variant": args.variant, "pairs": summary},
                    args.seed, _config_of(args))
    return EXIT_OK


def cmd_sae_train(args) -> int:
    manifest = io.load_manifest(args.manifest)
    names = set(args.model) if args.model else None
    reps, _ = _load_models(manifest, names)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows, results = [], {}
    for entry in manifest.models:
        if entry.name not in reps:
            continue
        data = reps[entry.name]
        k = args.k or entry.sae_k or 32
        cfg = SaeConfig(d_model=data.shape[1], d_sparse=args.d_sparse, k=k,
                        batch_size=min(args.batch_size, data.shape[0]), steps=args.steps,
                        learning_rate=args.learning_rate, weight_decay=args.weight_decay,
                        resample_period=args.resample_period,
                        resample_cutoff_fraction=args.resample_cutoff,
                        resample=not args.no_resample, seed=args.seed)
        params, log = sae_train(cfg, data)
        artifact = out_dir / f"{_safe(entry.name)}.sae"
        io.write_sae(artifact, params, k)
        for r in log.rows():
            rows.append({"model": entry.name, **r})
        results[entry.name] = {"artifact": artifact.name, "k": k,
                               "final_residual": residual_stats(params, data, k)}
    io.write_report(out_dir, "sae_train", rows, results, args.seed, _config_of(args),
                    columns=["model", "step", "mean_residual", "dead_features", "resampled"])
    return EXIT_OK


def _safe(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)


def cmd_sae_encode(args) -> int:
    manifest = io.load_manifest(args.manifest)
    names = set(args.model) if args.model else None
    reps, _ = _load_models(manifest, names)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = {}
    for entry in manifest.models:
        if entry.name not in reps:
            continue
        params, k = io.read_sae(manifest.sae_path(entry))
        k = entry.sae_k or k
        codes = encode_codes(params, reps[entry.name], k).tocoo()
        code_rows = [{"row": int(r), "feature": int(c), "value": float(v)}
                     for r, c, v in zip(codes.row, codes.col, codes.data)]
        io.write_csv(out_dir / f"codes_{_safe(entry.name)}.csv", code_rows, ["row", "feature", "value"])
        p5, p95, ratio = magnitude_stats(codes, k)
        filt = filter_features(codes, args.filter_upper, args.filter_lower)
        results[entry.name] = {
            "k": k, "n_rows": int(codes.shape[0]), "d_sparse": int(codes.shape[1]),
            "mean_residual": residual_stats(params, reps[entry.name], k),
            "magnitude_p5": p5, "magnitude_p95": p95, "magnitude_ratio": ratio,
            "kept_features": int(filt.kept.size),
        }
    rows = [{"model": name, "statistic": key, "value": val}
            for name, res in results.items() for key, val in res.items()]
    io.write_report(out_dir, "sae_encode", rows, results, args.seed, _config_of(args))
    return EXIT_OK


def cmd_match(args) -> int:
    manifest = io.load_manifest(args.manifest)
    pair = args.models or [m.name for m in manifest.models[:2]]
    if len(pair) != 2:
        raise UsageError("match needs exactly two models (--models A B)")
    reps, _ = _load_models(manifest, set(pair))
    codes = []
    for name in pair:
        z = _codes_for(manifest, manifest.model(name), reps[name])
        if args.filter:
            z = z[:, filter_features(z, args.filter_upper, args.filter_lower).kept]
        codes.append(z)
    null = permutation_null(codes[0], codes[1], args.n_draws, args.seed)
    rows = [{"draw": i, "correlation": v} for i, v in enumerate(null.draws)]
    results = {"model_a": pair[0], "model_b": pair[1], **null.to_dict(include_draws=args.verbose)}
    io.write_report(args.out_dir, "match", rows, results, args.seed, _config_of(args))
    return EXIT_OK


def cmd_freq_trend(args) -> int:
    manifest = io.load_manifest(args.manifest)
    if manifest.frequency_table_path is None:
        raise AlignmentError(f"{args.manifest}: freq-trend needs frequency_table_path")
    reps, subset = _load_models(manifest)
    _, freqs = io.read_frequency_table(manifest.frequency_table_path)
    n = next(iter(reps.values())).shape[0]
    if subset is not None and freqs.size != n:
        freqs = freqs[subset]
    views = _variant_views(manifest, reps, args.variant, args)
    metric = _metrics(args)[0]
    rows, results = [], []
    names = [m.name for m in manifest.models]
    for a, b in itertools.combinations(names, 2):
        rep = sliding_window_trend(views[a], views[b], freqs, args.window, args.step, metric)
        for i, (x, y) in enumerate(zip(rep.window_centers, rep.alignments)):
            rows.append({"model_a": a, "model_b": b, "window": i, "mean_inv_sqrt_freq": x, "alignment": y})
        results.append({"model_a": a, "model_b": b, **rep.to_dict()})
    io.write_report(args.out_dir, "freq_trend", rows, {"pairs": results}, args.seed, _config_of(args))
    return EXIT_OK


def _read_alignments(path, metric: str | None) -> dict:
    import csv
    sums: dict = {}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            if metric and row.get("metric") not in (None, "", metric):
                continue
            try:
                key = frozenset((row["model_a"], row["model_b"]))
                value = float(row["value"])
            except (KeyError, ValueError) as exc:
                raise AlignmentError(f"{path}:{lineno}: bad alignment row ({exc})") from None
            s = sums.setdefault(key, [0.0, 0])
            s[0] += value
            s[1] += 1
    return {key: s[0] / s[1] for key, s in sums.items()}


def cmd_spec_regress(args) -> int:
    if args.reference_specs:
        specs = reference_specs()
    else:
        manifest = io.load_manifest(args.manifest, require_files=False)
        specs = [m.spec for m in manifest.models]
        if any(s is None for s in specs):
            raise AlignmentError(f"{args.manifest}: every model needs a 'spec' for spec-regress")
    feats = build_spec_features(specs)
    metric = str(_metrics(args)[0]) if args.metric else None
    align = _read_alignments(args.alignments, metric)
    try:
        y = np.array([align[frozenset(p)] for p in feats.pair_index])
    except KeyError as exc:
        raise AlignmentError(f"{args.alignments}: no alignment value for pair {sorted(exc.args[0])}") from None
    model = RidgeDecomposition(alpha=args.lam).fit(feats.features, y)
    coef = model.coef_
    rows = [{"feature": n, "coefficient": c} for n, c in zip(feats.feature_names, coef)]
    results = {"n_pairs": len(feats.pair_index), "lambda": args.lam, "intercept": model.intercept_,
               "coefficients": dict(zip(feats.feature_names, coef.tolist())),
               "degenerate_features": feats.degenerate,
               "r_squared": float(model.score(feats.features, y)) if y.size > 1 else None}
    io.write_report(args.out_dir, "spec_regress", rows, results, args.seed, _config_of(args))
    return EXIT_OK


def cmd_incoherence(args) -> int:
    rows = []
    if args.manifest:
        manifest = io.load_manifest(args.manifest, require_files=False)
        for entry in manifest.models:
            params, _ = io.read_sae(manifest.sae_path(entry))
            mean, peak = incoherence_stats(params.decoder_weight)
            d = params.d_model
            rows.append({"source": entry.name, "d": d, "m": params.d_sparse, "mean_abs_inner": mean,
                         "max_abs_inner": peak, "reference": math.sqrt(2.0 / (math.pi * d))})
    else:
        for d in args.dims:
            dictionary, _, _ = generate_dictionary(d, args.m, args.seed)
            mean, peak = incoherence_stats(dictionary)
            rows.append({"source": "gaussian", "d": d, "m": args.m, "mean_abs_inner": mean,
                         "max_abs_inner": peak, "reference": math.sqrt(2.0 / (math.pi * d))})
    rows.sort(key=lambda r: (r["d"], r["source"]))
    io.write_report(args.out_dir, "incoherence", rows, {"dictionaries": rows}, args.seed, _config_of(args))
    return EXIT_OK


def cmd_synth_certify(args) -> int:
    base = CERTIFY_CONFIG
    config = SyntheticConfig(
        d=args.d or base.d, m=args.m or base.m, k=args.k or base.k,
        phi=args.phi or base.phi, Phi=args.Phi or base.Phi,
        eps_noise_raw=base.eps_noise_raw if args.eps_noise is None else args.eps_noise,
        n_pairs=args.n_pairs or base.n_pairs,
        overlap_schedule=tuple(range((args.k or base.k) + 1)),
        seed=args.seed, dictionary_mode=args.dictionary_mode or base.dictionary_mode,
        unit_signal=base.unit_signal if args.unit_signal is None else args.unit_signal,
    )
    report = certify(config, tuple(args.gammas), verbose=args.verbose)
    rows = [{"check": "additivity", "gamma": "", "value": report.max_additivity_error}]
    rows += [{"check": f"{name}_violations", "gamma": "", "value": v}
             for name, v in sorted(report.bound_violations.items())]
    for p in report.prop1:
        d = p.to_dict()
        rows.append({"check": "prop1_status", "gamma": p.gamma, "value": d["status"]})
    rows.append({"check": "passed", "gamma": "", "value": report.passed})
    io.write_report(args.out_dir, "synth_certify", rows, report.to_dict(), args.seed, _config_of(args))
    return EXIT_OK if report.passed else EXIT_CERT_FAIL


# -- parser ------------------------------------------------------------------------------

def _common(p, manifest_required=True):
    p.add_argument("--manifest", required=manifest_required, help="manifest JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="out")
    p.add_argument("--config", help="key = value file; command-line flags win")
    p.add_argument("--verbose", action="store_true", help="include per-draw / per-pair detail")


def _metric_flag(p):
    p.add_argument("--metric", action="append",
                   help="metric id such as cka, cka_unbiased, svcca:10, knn_overlap:10, knn_edit:10 (repeatable)")


def _filter_flags(p):
    p.add_argument("--filter-upper", type=float, default=0.1, help="max activation frequency kept")
    p.add_argument("--filter-lower", type=float, default=0.00001, help="min activation frequency kept")


def _csv_ints(text):
    return [int(x) for x in str(text).split(",") if x.strip()]


def _csv_floats(text):
    return [float(x) for x in str(text).split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="repalign", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("align", help="pairwise alignment over subsamples")
    _common(p)
    _metric_flag(p)
    _filter_flags(p)
    p.add_argument("--sample-size", type=int, default=1000)
    p.add_argument("--n-samples", type=int, default=10)
    p.add_argument("--variant", choices=("raw", "debiased", "sparse"), default="raw")
    p.set_defaults(func=cmd_align)

    sae = sub.add_parser("sae", help="sparse autoencoder training and encoding")
    sae_sub = sae.add_subparsers(dest="sae_command", required=True, parser_class=_Parser)
    p = sae_sub.add_parser("train", help="train one top-k SAE per model")
    _common(p)
    p.add_argument("--model", action="append", help="restrict to these models (repeatable)")
    p.add_argument("--d-sparse", type=int, default=16384)
    p.add_argument("--k", type=int, default=None, help="defaults to the manifest's sae_k, else 32")
    p.add_argument("--batch-size", type=int, default=1024)
    p.add_argument("--steps", type=int, default=20000)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--weight-decay", type=float, default=1e-4)
    p.add_argument("--resample-period", type=int, default=2500)
    p.add_argument("--resample-cutoff", type=float, default=0.8)
    p.add_argument("--no-resample", action="store_true")
    p.set_defaults(func=cmd_sae_train)
    p = sae_sub.add_parser("encode", help="encode embeddings with trained SAEs")
    _common(p)
    _filter_flags(p)
    p.add_argument("--model", action="append")
    p.set_defaults(func=cmd_sae_encode)

    p = sub.add_parser("match", help="permutation-matched code correlation with a shuffle null")
    _common(p)
    _filter_flags(p)
    p.add_argument("--models", nargs=2, metavar=("A", "B"))
    p.add_argument("--n-draws", type=int, default=100)
    p.add_argument("--filter", action="store_true", help="restrict to kept features before matching")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("freq-trend", help="alignment against word frequency on sliding windows")
    _common(p)
    _metric_flag(p)
    _filter_flags(p)
    p.add_argument("--window", type=int, default=500)
    p.add_argument("--step", type=int, default=250)
    p.add_argument("--variant", choices=("raw", "debiased", "sparse"), default="raw")
    p.set_defaults(func=cmd_freq_trend)

    p = sub.add_parser("spec-regress", help="ridge regression of alignment on model specifications")
    _common(p, manifest_required=False)
    _metric_flag(p)
    p.add_argument("--alignments", required=True,
                   help="CSV with model_a, model_b, value (and optionally metric) columns")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--reference-specs", action="store_true",
                   help="use the bundled 30-model specification table")
    p.set_defaults(func=cmd_spec_regress)

    p = sub.add_parser("incoherence", help="mean/max |<A_i, A_j>| of dictionaries")
    _common(p, manifest_required=False)
    p.add_argument("--dims", type=_csv_ints, default=[64, 128, 256, 512])
    p.add_argument("--m", type=int, default=1024)
    p.set_defaults(func=cmd_incoherence)

    synth = sub.add_parser("synth", help="synthetic sparse-dictionary model")
    synth_sub = synth.add_subparsers(dest="synth_command", required=True, parser_class=_Parser)
    p = synth_sub.add_parser("certify", help="certify bounds and implications on synthetic draws")
    _common(p, manifest_required=False)
    p.add_argument("--d", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--phi", type=float)
    p.add_argument("--Phi", type=float)
    p.add_argument("--eps-noise", type=float)
    p.add_argument("--n-pairs", type=int)
    p.add_argument("--gammas", type=_csv_floats, default=[0.05, 0.1, 0.2])
    p.add_argument("--dictionary-mode", choices=("gaussian", "orthonormal", "mub"))
    p.add_argument("--unit-signal", type=lambda s: _parse_bool(s), default=None)
    p.set_defaults(func=cmd_synth_certify)
    return parser


def _parse_bool(text) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def read_config_file(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment; keys use flag or dest spelling."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value.strip("\"'")
    return out


def _leaf_parser(parser, argv):
    """The subparser that will handle ``argv``."""
    node = parser
    for tok in argv:
        actions = [a for a in node._actions if isinstance(a, argparse._SubParsersAction)]
        if not actions:
            break
        if tok in actions[0].choices:
            node = actions[0].choices[tok]
    return node


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    leaf = _leaf_parser(parser, argv)
    by_dest = {a.dest: a for a in leaf._actions}
    defaults = {}
    for key, value in read_config_file(known.config).items():
        if key == "lambda":
            key = "lam"
        action = by_dest.get(key)
        if action is None or key in ("config", "help"):
            raise UsageError(f"{known.config}: unknown option {key!r}")
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = _parse_bool(value)
        elif isinstance(action, argparse._AppendAction):
            defaults[key] = [v.strip() for v in value.split(",") if v.strip()]
        elif action.nargs not in (None, "?"):
            defaults[key] = value.split()
        else:
            defaults[key] = action.type(value) if action.type else value
    leaf.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (AlignmentError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
