"""Command-line interface.

Subcommands: ``generate`` (benchmark instances), ``fit`` (model parameters),
``correlate`` (layer-correlation matrix) and ``predict`` (cross-validated
edge prediction). Every option can also be given in a ``--config`` file of
``key = value`` lines, using the option name with underscores; options on
the command line take precedence.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .counts import bundle_cooccurrence, degree_correction_sums, global_cooccurrence
from .dcsbm import fit_corr_dcsbm_approx, fit_corr_dcsbm_full
from .errors import (
    CorrLayersError,
    FewerThanTwoLayers,
    MissingPartition,
    NumericalError,
    ValidationError,
)
from .estimators import (
    effective_correlation,
    er_fisher_variance,
    fit_corr_er,
    fit_corr_sbm,
)
from .generators import BenchmarkConfig, make_benchmark
from .io import (
    read_edge_list,
    read_multiplex_edges,
    read_partition,
    read_partition_pairs,
    write_edge_list,
    write_partition,
)
from .network import BlockPartition, normalized_degrees
from .prediction import ModelKind, cross_validate
from .reporting import (
    SCHEMA_VERSION,
    bundle_correlations,
    dump_json,
    layer_correlation_matrix,
    write_curve_csv,
)

log = logging.getLogger("corrlayers")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3
DEFAULT_FIT_MODELS = "CorrER,CorrSBM,CorrDCSBM"
DEFAULT_PREDICT_MODELS = ",".join(k.value for k in ModelKind)


# --- argument parsing --------------------------------------------------------

def _add_common(p):
    p.add_argument("--config", help="file of 'key = value' lines supplying defaults")
    p.add_argument("--seed", type=int, default=0, help="random seed (echoed in outputs)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_input(p, partition_help):
    p.add_argument("--input", required=True, help="multilayer edge list")
    p.add_argument("--format", choices=("edgelist", "multiplex"), default="edgelist",
                   help="'multiplex' reads 'layerID node node weight' files")
    p.add_argument("--layer-names", help="layer ID/label table for --format multiplex")
    p.add_argument("--partition", help=partition_help)
    p.add_argument("--directed", action="store_true")
    p.add_argument("--self-edges", action="store_true")
    p.add_argument("--bipartite", action="store_true",
                   help="sources are left-side nodes, targets right-side nodes")
    p.add_argument("--weight-threshold-quantile", type=float, default=None,
                   help="per layer, drop edges whose weight is below this quantile")


def _layer_pair(text):
    parts = [x.strip() for x in text.split(",")]
    if len(parts) != 2 or not all(parts):
        raise argparse.ArgumentTypeError("expected two layers as 'a,b'")
    return tuple(parts)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corrlayers", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="sample a two-layer benchmark network")
    _add_common(gen)
    gen.add_argument("--N", type=int, default=1000, help="number of nodes")
    gen.add_argument("--n-c", type=int, default=5, help="number of communities")
    gen.add_argument("--mu", type=float, default=0.3, help="mixing parameter")
    gen.add_argument("--rho", type=float, default=0.5, help="target layer correlation")
    gen.add_argument("--eta-k", type=float, default=-2.0, help="degree power-law exponent")
    gen.add_argument("--k-min", type=float, default=10.0)
    gen.add_argument("--k-max", type=float, default=50.0)
    gen.add_argument("--dirichlet-concentration", type=float, default=1.0)
    gen.add_argument("--variant", choices=("CorrSBM", "CorrDCSBM"), default="CorrSBM")

    fit = sub.add_parser("fit", help="fit correlated models to a layer pair")
    _add_common(fit)
    _add_input(fit, "node/block file (a single block when omitted)")
    fit.add_argument("--layers", type=_layer_pair, default=None,
                     help="layer names or 1-based indices 'a,b' (default: first two)")
    fit.add_argument("--models", default=DEFAULT_FIT_MODELS)
    fit.add_argument("--full", action="store_true",
                     help="also maximise the exact degree-corrected likelihood")

    cor = sub.add_parser("correlate", help="layer-correlation matrix")
    _add_common(cor)
    _add_input(cor, "node/block file for per-bundle correlations")

    pred = sub.add_parser("predict", help="cross-validated edge prediction")
    _add_common(pred)
    _add_input(pred, "node/block file (required for block models)")
    pred.add_argument("--layers", type=_layer_pair, default=None)
    pred.add_argument("--models", default=DEFAULT_PREDICT_MODELS)
    pred.add_argument("--kfolds", type=int, default=5)
    pred.add_argument("--curve-points", type=int, default=2000,
                      help="maximum points per written ROC/PR curve")
    return parser


def _config_argv(path, subparser) -> list[str]:
    """Translate a key-value config file into command-line tokens."""
    flags = {}
    for action in subparser._actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                flags[opt[2:].replace("-", "_")] = action
    argv = []
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ValidationError(f"cannot read config file: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (x.strip() for x in line.split("=", 1))
        action = flags.get(key.replace("-", "_"))
        if action is None or key == "config":
            raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")
        opt = next(o for o in action.option_strings if o.startswith("--"))
        if isinstance(action, argparse._StoreTrueAction):
            if value.lower() in ("1", "true", "yes", "on"):
                argv.append(opt)
            elif value.lower() not in ("0", "false", "no", "off"):
                raise ValidationError(f"{path}:{lineno}: {key} expects true/false")
        else:
            argv += [opt, value]
    return argv


def _find_config(argv) -> str | None:
    for k, token in enumerate(argv):
        if token == "--config" and k + 1 < len(argv):
            return argv[k + 1]
        if token.startswith("--config="):
            return token.split("=", 1)[1]
    return None


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    subparsers = parser._subparsers._group_actions[0].choices
    config = _find_config(argv)
    command = next((t for t in argv if t in subparsers), None)
    if config is not None and command is not None:
        # config values first so explicit flags override them
        k = argv.index(command)
        argv = [*argv[:k + 1], *_config_argv(config, subparsers[command]), *argv[k + 1:]]
    return parser.parse_args(argv)


def resolved_config(args) -> dict:
    skip = {"verbose"}
    return {k: (list(v) if isinstance(v, tuple) else v)
            for k, v in sorted(vars(args).items()) if k not in skip and v is not None}


# --- helpers -----------------------------------------------------------------

def _header(args, result: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "tool": "corrlayers", "version": __version__,
            "command": args.command, "seed": args.seed,
            "config": resolved_config(args), "result": result}


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args):
    """Network, node index and partition (or None) from the input options."""
    for path in (args.input, args.partition, args.layer_names):
        if path is not None and not Path(path).is_file():
            raise ValidationError(f"file not found: {path}")
    extra = [node for node, _ in read_partition_pairs(args.partition)] if args.partition else ()
    if args.format == "multiplex":
        if args.bipartite or args.self_edges:
            raise ValidationError("multiplex input supports --directed only")
        net, index = read_multiplex_edges(args.input, args.layer_names, args.directed,
                                          args.weight_threshold_quantile, extra)
    else:
        net, index = read_edge_list(args.input, args.directed, args.self_edges,
                                    args.bipartite, args.weight_threshold_quantile, extra)
    partition = read_partition(args.partition, index) if args.partition else None
    return net, index, partition


def _layer_indices(net, chosen) -> tuple[int, int]:
    if net.n_layers < 2:
        raise FewerThanTwoLayers(f"input has {net.n_layers} layer(s); need two")
    if chosen is None:
        return 0, 1
    out = []
    for token in chosen:
        if token in net.layer_names:
            out.append(net.layer_names.index(token))
        elif token.isdigit() and 1 <= int(token) <= net.n_layers:
            out.append(int(token) - 1)
        else:
            raise ValidationError(f"unknown layer {token!r}")
    if out[0] == out[1]:
        raise ValidationError("the two layers must differ")
    return tuple(out)


def _models(text) -> list[ModelKind]:
    return [ModelKind.parse(x.strip()) for x in text.split(",") if x.strip()]


def _counts_dict(c) -> dict:
    return {"e11": c.e11, "e10": c.e10, "e01": c.e01, "e00": c.e00}


def _er_dict(params, num_pairs) -> dict:
    out = {"p1": params.p1, "p2": params.p2, "q": params.q, "rho": params.rho}
    try:
        out["fisher"] = er_fisher_variance(params, num_pairs).as_dict()
    except NumericalError as exc:
        out["fisher"] = None
        out["fisher_note"] = str(exc)
    return out


def _dcsbm_dict(params) -> dict:
    return {"P1": params.P1, "P2": params.P2, "Q": params.Q, "Rho": params.Rho,
            "status": {f"{r},{s}": st for (r, s), st in sorted(params.status.items())}}


# --- subcommands -------------------------------------------------------------

def cmd_generate(args) -> dict:
    cfg = BenchmarkConfig(N=args.N, n_c=args.n_c, mu=args.mu, rho=args.rho,
                          eta_k=args.eta_k, k_min=args.k_min, k_max=args.k_max,
                          dirichlet_concentration=args.dirichlet_concentration,
                          variant=args.variant, seed=args.seed)
    inst = make_benchmark(cfg)
    out = _out_dir(args)
    names = [str(i) for i in range(inst.network.n)]
    write_edge_list(inst.network, out / "edges.tsv", names)
    write_partition(inst.partition, out / "partition.tsv", names)
    truth = inst.truth
    result = {"variant": cfg.variant, "n_nodes": inst.network.n,
              "edges": [inst.network.n_edges(0), inst.network.n_edges(1)],
              "block_sizes": inst.partition.sizes(), "clamped_probabilities": inst.n_clamped,
              "truth": {"P1": truth.P1, "P2": truth.P2, "Q": truth.Q, "Rho": truth.Rho}}
    if cfg.variant == "CorrDCSBM":
        result["truth"]["theta"] = truth.theta1.values
    dump_json(_header(args, result), out / "truth.json")
    return result


def cmd_fit(args) -> dict:
    net, index, partition = _load(args)
    la, lb = _layer_indices(net, args.layers)
    partition = partition or BlockPartition.single(net.n)
    models = _models(args.models)
    counts = global_cooccurrence(net, la, lb)
    result = {"layers": [net.layer_names[la], net.layer_names[lb]], "n_nodes": net.n,
              "n_pairs": net.n_pairs, "K": partition.K, "counts": _counts_dict(counts),
              "effective_correlation": effective_correlation(counts), "models": {}}
    bundles = bundle_cooccurrence(net, partition, la, lb)
    for kind in models:
        if kind == ModelKind.CorrER:
            result["models"][kind.value] = _er_dict(fit_corr_er(counts), counts.total)
        elif kind == ModelKind.CorrSBM:
            p = fit_corr_sbm(bundles)
            result["models"][kind.value] = {"P1": p.P1, "P2": p.P2, "Q": p.Q, "Rho": p.Rho,
                                            "pairs": bundles.total}
        elif kind in (ModelKind.CorrDCSBM, ModelKind.CorrCM):
            part = partition if kind == ModelKind.CorrDCSBM else BlockPartition.single(net.n)
            theta1, theta2 = normalized_degrees(net, la), normalized_degrees(net, lb)
            b = bundles if kind == ModelKind.CorrDCSBM else bundle_cooccurrence(net, part, la, lb)
            sums = degree_correction_sums(net, part, theta1, theta2, None, la, lb)
            approx = fit_corr_dcsbm_approx(b, sums, part)
            entry = {"approximate": _dcsbm_dict(approx), "theta1": theta1.values,
                     "theta2": theta2.values,
                     "isolated_nodes": {"layer_a": theta1.isolated, "layer_b": theta2.isolated}}
            if args.full:
                full = fit_corr_dcsbm_full(net, part, theta1, theta2, None, la, lb, start=approx)
                entry["full"] = _dcsbm_dict(full)
            result["models"][kind.value] = entry
        else:
            raise ValidationError(f"fit does not support {kind.value}")
    result["nodes"] = index.names()
    dump_json(_header(args, result), _out_dir(args) / "fit.json")
    return result


def cmd_correlate(args) -> dict:
    net, _, partition = _load(args)
    matrix = layer_correlation_matrix(net)
    result = matrix.as_dict()
    if partition is not None:
        result["bundle_correlations"] = {
            f"{net.layer_names[a]}|{net.layer_names[b]}": rho
            for (a, b), rho in bundle_correlations(net, partition).items()}
    dump_json(_header(args, result), _out_dir(args) / "correlate.json")
    return result


def cmd_predict(args) -> dict:
    net, _, partition = _load(args)
    la, lb = _layer_indices(net, args.layers)
    models = _models(args.models)
    missing = [k.value for k in models if k.uses_partition]
    if missing and partition is None:
        raise MissingPartition(f"--partition is required for {', '.join(missing)}")
    out = _out_dir(args)
    curves = out / "curves"
    curves.mkdir(exist_ok=True)
    result = {"layers": [net.layer_names[la], net.layer_names[lb]], "models": {}}
    for kind in models:
        report = cross_validate(net, partition, kind, args.kfolds, args.seed, (la, lb))
        result["models"][kind.value] = report.as_dict()
        write_curve_csv(report.roc.thinned(args.curve_points),
                        curves / f"roc_{kind.value}.csv", ("fpr", "tpr"))
        write_curve_csv(report.pr.thinned(args.curve_points),
                        curves / f"pr_{kind.value}.csv", ("recall", "precision"))
    dump_json(_header(args, result), out / "predict.json")
    return result


COMMANDS = {"generate": cmd_generate, "fit": cmd_fit, "correlate": cmd_correlate,
            "predict": cmd_predict}


def _summary(command, result) -> str:
    if command == "correlate":
        top = result["top_pair"]
        mean = result["mean_offdiagonal"]
        text = f"mean correlation: {'n/a' if mean is None else f'{mean:.4f}'}"
        if top is not None:
            text += f"\ntop pair: {top['layers'][0]} / {top['layers'][1]} ({top['correlation']:.4f})"
        return text
    if command == "predict":
        return "\n".join(f"{name}: AUC {m['auc']:.4f}  AUPR {m['aupr']:.4f}"
                         for name, m in result["models"].items())
    if command == "fit":
        rho = result["effective_correlation"]
        return f"effective correlation: {'n/a' if rho is None else f'{rho:.4f}'}"
    return f"edges per layer: {result['edges']}"


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            with np.errstate(all="ignore"):
                result = COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CorrLayersError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(_summary(args.command, result))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
