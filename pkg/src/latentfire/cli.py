"""
``latentfire`` command-line interface.

Every subcommand writes a JSON report to ``--out``; side artifacts (CSV
factors, FTEN tensors, SVG plots) go next to it with the same stem, plus a
``<stem>.manifest.json`` run manifest. ``replay`` re-runs a manifest.

Exit status: 0 on success, 1 on domain, format or I/O errors, 2 on usage
errors.
"""

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, io, oracles, plots
from .errors import FormatError, LatentFireError
from .nmf import LOSSES, NmfConfig, nmf_solve
from .ntf import (NtfConfig, cpd_reconstruct, ncpd_solve, ntt_solve, ntucker_solve,
                  tt_reconstruct, tucker_reconstruct)
from .pipelines import AudioConfig, VideoConfig, audio_pipeline, video_pipeline
from .salient import SpatioTemporalTensor, ntd1_decompose
from .selection import (REPLICA_NMF, PerturbConfig, SelectionRule, select_k,
                        select_tensor_ranks)
from .tensor import relative_error


class _Outputs:
    """Tracks the report path and the side artifacts written beside it."""

    def __init__(self, out):
        self.report = Path(out)
        self.written = []

    def side(self, suffix):
        name = self.report.name
        stem = name[:-5] if name.endswith(".json") else name
        return self.report.with_name(f"{stem}.{suffix}")

    def factors(self, suffix, matrix, prefix="c"):
        path = self.side(suffix)
        io.write_factors(path, matrix, prefix)
        self.written.append(str(path))

    def tensor(self, suffix, x):
        path = self.side(suffix)
        io.write_tensor(path, x)
        self.written.append(str(path))

    def svg(self, suffix, text):
        path = self.side(suffix)
        io.write_text(path, text)
        self.written.append(str(path))


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _k_arg(text):
    if text == "auto":
        return text
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'auto', got {text!r}")


def _perturb(args):
    return PerturbConfig(epsilon=args.epsilon, replicas=args.replicas, master_seed=args.seed,
                         restarts=args.restarts)


def _rule(args):
    return SelectionRule(threshold=args.threshold)


def _selection_nmf(args):
    return replace(REPLICA_NMF, max_iters=args.selection_iters)


# -- subcommands -----------------------------------------------------------

def cmd_nmf(args, out):
    x = io.read_tensor(args.input)
    if x.ndim != 2:
        raise FormatError(f"{args.input}: nmf needs a matrix, got {x.ndim} dimensions")
    cfg = NmfConfig(k=args.k, loss=args.loss, max_iters=args.max_iters, tol=args.tol,
                    seed=args.seed)
    model = nmf_solve(x, cfg)
    out.factors("W.csv", model.w)
    out.factors("H.csv", model.h.T)
    out.svg("objective.svg", plots.objective_trace(model.objective_trace))
    out.svg("components.svg", plots.heatmap(model.w, "W", "component", "row"))
    return {
        "k": model.k, "loss": cfg.loss, "iters_run": model.iters_run,
        "converged": model.converged, "objective_trace": model.objective_trace,
        "relative_error": relative_error(x, model.reconstruct()),
    }


def cmd_select_k(args, out):
    x = io.read_tensor(args.input)
    if x.ndim != 2:
        raise FormatError(f"{args.input}: select-k needs a matrix, got {x.ndim} dimensions")
    report = select_k(x, (args.k_min, args.k_max), _selection_nmf(args), _perturb(args),
                      _rule(args), args.jobs)
    out.svg("silhouette.svg", plots.silhouette_curve(report))
    return report.to_dict()


def _ntf_cfg(args):
    return NtfConfig(max_iters=args.max_iters, tol=args.tol, seed=args.seed)


def cmd_cpd(args, out):
    x = io.read_tensor(args.input)
    model = ncpd_solve(x, args.rank, _ntf_cfg(args))
    for n, f in enumerate(model.factors):
        out.factors(f"factor{n}.csv", f)
    out.svg("objective.svg", plots.objective_trace(model.objective_trace))
    return {
        "rank": model.rank, "shape": list(model.shape), "iters_run": model.iters_run,
        "converged": model.converged, "objective_trace": model.objective_trace,
        "relative_error": relative_error(x, cpd_reconstruct(model)),
    }


def cmd_tucker(args, out):
    x = io.read_tensor(args.input)
    selection = None
    ranks = args.ranks
    if ranks is None:
        ranges = [(1, min(args.max_rank, n)) for n in x.shape]
        sel = select_tensor_ranks(x, ranges, _selection_nmf(args), _perturb(args), _rule(args),
                                  args.jobs)
        ranks, selection = sel.ranks, [r.to_dict() for r in sel.reports]
    model = ntucker_solve(x, ranks, _ntf_cfg(args))
    out.tensor("core.ften", model.core)
    for n, f in enumerate(model.factors):
        out.factors(f"factor{n}.csv", f)
    out.svg("objective.svg", plots.objective_trace(model.objective_trace))
    return {
        "ranks": list(model.ranks), "shape": list(model.shape), "iters_run": model.iters_run,
        "converged": model.converged, "objective_trace": model.objective_trace,
        "relative_error": relative_error(x, tucker_reconstruct(model)),
        "rank_selection": selection,
    }


def cmd_tt(args, out):
    x = io.read_tensor(args.input)
    cfg = replace(_ntf_cfg(args), loss=args.loss)
    model = ntt_solve(x, args.ranks, cfg)
    for n, core in enumerate(model.cores):
        out.tensor(f"core{n}.ften", core)
    return {
        "ranks": list(model.ranks), "shape": list(model.shape),
        "stage_objectives": [s.objective_trace[-1] for s in model.stages],
        "relative_error": relative_error(x, tt_reconstruct(model)),
    }


def cmd_salient(args, out):
    x = SpatioTemporalTensor.from_array(io.read_tensor(args.input), args.time_mode)
    cfg = NmfConfig(k=1, loss="kl", max_iters=args.max_iters, tol=args.tol, seed=args.seed,
                    obj_stride=10)
    k_range = None if args.k_max is None else (args.k_min, args.k_max)
    rep = ntd1_decompose(x, args.k, cfg, k_range, _perturb(args), _rule(args), args.jobs)
    out.factors("time_features.csv", rep.time_features, "w")
    out.tensor("space_features.ften", rep.space_features)
    out.svg("time_features.svg", plots.components(rep.time_features, "Time features", "t"))
    if rep.selection is not None:
        out.svg("silhouette.svg", plots.silhouette_curve(rep.selection))
    return {
        "k": rep.k, "salient_timesteps": rep.salient_timesteps,
        "residual_norm": rep.residual_norm, "flat_features": rep.flat_features,
        "selection": None if rep.selection is None else rep.selection.to_dict(),
    }


def cmd_audio(args, out):
    clip = io.read_wav(args.input)
    cfg = AudioConfig(
        bands=args.bands, k=args.k, k_range=(args.k_min, args.k_max),
        nmf=NmfConfig(k=1, loss="kl", max_iters=args.max_iters, obj_stride=10),
        selection_nmf=_selection_nmf(args), perturb=_perturb(args), rule=_rule(args),
        threshold_sigma=args.sigma, min_run=args.min_run,
    )
    model, selection, report = audio_pipeline(clip, cfg, args.jobs)
    if model is not None:
        out.factors("W.csv", model.w)
        out.factors("H.csv", model.h.T)
        out.svg("spectra.svg", plots.components(model.w, "Spectral signatures", "mel band"))
        out.svg("activations.svg", plots.heatmap(model.h, "Activations", "frame", "source"))
        out.svg("events.svg", plots.event_timeline(report, model.h.shape[1]))
    if selection is not None:
        out.svg("silhouette.svg", plots.silhouette_curve(selection))
    result = report.to_dict()
    result["selection"] = None if selection is None else selection.to_dict()
    return result


def cmd_video(args, out):
    video = SpatioTemporalTensor.from_array(io.read_tensor(args.input), args.time_mode)
    cfg = VideoConfig(
        window=args.window, hop=args.hop, channels=args.channels, grid=args.grid,
        ranks=args.ranks, max_rank=args.max_rank, cpd_rank=args.cpd_rank,
        ntf=NtfConfig(max_iters=args.max_iters), selection_nmf=_selection_nmf(args),
        perturb=_perturb(args), rule=_rule(args), threshold_sigma=args.sigma,
        min_run=args.min_run,
    )
    tucker, cpd, report = video_pipeline(video, cfg, args.jobs)
    if tucker is not None:
        time_sig = tucker.factors[1] @ cpd.factors[1]
        out.factors("time_traces.csv", time_sig, "s")
        out.svg("time_traces.svg", plots.components(time_sig, "Component traces", "window"))
        out.svg("events.svg", plots.event_timeline(report, time_sig.shape[0]))
    return report.to_dict()


def cmd_oracle(args):
    a = io.read_tensor(args.a)
    b = io.read_tensor(args.b)
    if a.shape != b.shape:
        raise FormatError(f"shape mismatch: {args.a} is {a.shape}, {args.b} is {b.shape}")
    if args.quantity == "kl":
        value = oracles.kl_divergence(a, b)
    else:
        if not np.any(a):
            raise FormatError(f"{args.a}: relative error undefined for a zero-norm reference")
        value = oracles.relative_error(a, b)
    print(repr(float(value)))


# -- parser ----------------------------------------------------------------

def _common(p, seed=True):
    p.add_argument("--input", required=True, help="input file")
    p.add_argument("--out", required=True, help="report path (JSON)")
    if seed:
        p.add_argument("--seed", type=int, required=True, help="master seed")
    p.add_argument("--jobs", type=int, default=None,
                   help="worker count (default: LATENTFIRE_THREADS or all cores)")


def _solver(p, iters=1000):
    p.add_argument("--max-iters", type=int, default=iters)
    p.add_argument("--tol", type=float, default=1e-6)


def _selection(p):
    p.add_argument("--replicas", type=int, default=10)
    p.add_argument("--epsilon", type=float, default=0.02)
    p.add_argument("--threshold", type=float, default=0.75, help="minimum silhouette")
    p.add_argument("--selection-iters", type=int, default=300,
                   help="NMF iterations per replica")
    p.add_argument("--restarts", type=int, default=1,
                   help="random starts per replica, best objective kept")


def _events(p, min_run):
    p.add_argument("--sigma", type=float, default=3.0, help="robust z-score threshold")
    p.add_argument("--min-run", type=int, default=min_run)


def build_parser():
    parser = argparse.ArgumentParser(prog="latentfire", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("nmf", help="non-negative matrix factorization of an FTEN matrix")
    _common(p)
    _solver(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--loss", choices=LOSSES, default="kl")
    p.set_defaults(func=cmd_nmf)

    p = sub.add_parser("select-k", help="estimate the latent dimension with NMFk")
    _common(p)
    _selection(p)
    p.add_argument("--k-min", type=int, required=True)
    p.add_argument("--k-max", type=int, required=True)
    p.set_defaults(func=cmd_select_k)

    p = sub.add_parser("cpd", help="non-negative CP decomposition")
    _common(p)
    _solver(p)
    p.add_argument("--rank", type=int, required=True)
    p.set_defaults(func=cmd_cpd)

    p = sub.add_parser("tucker", help="non-negative Tucker decomposition")
    _common(p)
    _solver(p)
    _selection(p)
    p.add_argument("--ranks", type=_int_list, default=None,
                   help="comma-separated multilinear ranks (default: select per mode)")
    p.add_argument("--max-rank", type=int, default=6)
    p.set_defaults(func=cmd_tucker)

    p = sub.add_parser("tt", help="non-negative tensor train")
    _common(p)
    _solver(p)
    p.add_argument("--ranks", type=_int_list, required=True)
    p.add_argument("--loss", choices=LOSSES, default="frobenius")
    p.set_defaults(func=cmd_tt)

    p = sub.add_parser("salient", help="salient timesteps of a spatiotemporal tensor")
    _common(p)
    _solver(p)
    _selection(p)
    p.add_argument("--k", type=_k_arg, default="auto")
    p.add_argument("--k-min", type=int, default=1)
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("--time-mode", type=int, default=0)
    p.set_defaults(func=cmd_salient)

    p = sub.add_parser("audio-anomaly", help="spectral source separation and event detection")
    _common(p)
    _selection(p)
    _events(p, 3)
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--bands", type=int, default=64)
    p.add_argument("--k", type=int, default=None, help="number of sources (default: select)")
    p.add_argument("--k-min", type=int, default=1)
    p.add_argument("--k-max", type=int, default=4)
    p.set_defaults(func=cmd_audio)

    p = sub.add_parser("video-anomaly", help="Tucker + CPD event detection on video tensors")
    _common(p)
    _selection(p)
    _events(p, 1)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--window", type=int, default=32)
    p.add_argument("--hop", type=int, default=16)
    p.add_argument("--channels", choices=("block", "full", "pixel"), default="block")
    p.add_argument("--grid", type=int, default=4)
    p.add_argument("--ranks", type=_int_list, default=None)
    p.add_argument("--max-rank", type=int, default=4)
    p.add_argument("--cpd-rank", type=int, default=None)
    p.add_argument("--time-mode", type=int, default=0)
    p.set_defaults(func=cmd_video)

    p = sub.add_parser("oracle", help="brute-force reference values for cross-checking")
    p.add_argument("quantity", choices=("kl", "relerr"))
    p.add_argument("--a", required=True, help="reference tensor (FTEN)")
    p.add_argument("--b", required=True, help="approximation (FTEN)")
    p.set_defaults(func=None)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", required=True, help="report path for the re-run")
    p.set_defaults(func=None)
    return parser


def _run(argv, args):
    out = _Outputs(args.out)
    start = time.perf_counter()
    result = args.func(args, out)
    io.write_report(out.report, result)
    config = {k: v for k, v in vars(args).items() if k != "func"}
    digests = {args.input: io.file_digest(args.input)}
    manifest = io.RunManifest(
        command=args.command, argv=list(argv), config=io.to_jsonable(config),
        master_seed=args.seed, input_digests=digests, tool_version=__version__,
        wall_time=time.perf_counter() - start, outputs=[str(out.report)] + out.written)
    io.write_report(out.side("manifest.json"), manifest)


def _replay(args):
    manifest = io.RunManifest.load(args.manifest)
    for path, digest in manifest.input_digests.items():
        if io.file_digest(path) != digest:
            raise FormatError(f"{path}: contents changed since the manifest was written")
    argv = [a for a in manifest.argv if not a.startswith("--out=")]
    if "--out" in argv:
        i = argv.index("--out")
        del argv[i:i + 2]
    argv += ["--out", args.out]
    return main(argv)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "oracle":
            cmd_oracle(args)
        elif args.command == "replay":
            return _replay(args)
        else:
            _run(argv, args)
    except (LatentFireError, OSError, ValueError) as exc:
        print(f"latentfire {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
