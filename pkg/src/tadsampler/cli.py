"""Command line pipeline driver.

One JSON config file plus flag overrides drive every stage, with precedence
flags > config file > defaults.  All randomness flows from the single
--seed value; environment variables are never consulted.  Each subcommand
writes its declared artifacts under --out and prints a one-line JSON summary
to stdout, exiting nonzero on any error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import embed as emb
from . import evaluate as ev
from . import ingest, learn, model, sampler, stats, topology

# Every PipelineConfig field appears here; --help prints this table and a
# self-check keeps the two in sync.
CONFIG_FIELDS = {
    "tracks": "list of bedGraph paths, one per marker (ingest)",
    "marker_names": "marker labels matching tracks; defaults to file stems",
    "bin_size": "base pairs per nucleosome bin (default 200)",
    "binarize_threshold": "signal level above which a bin counts as incident",
    "binarize_strict": "true: strictly greater than threshold (default)",
    "incidence": "incidence matrix CSV path (stats input / ingest output)",
    "shape": "[M, N, L] model dimensions",
    "boundary": "nucleosome chain boundary: periodic or open",
    "denominator": "open-boundary correlation divisor: valid (N-l) or n",
    "stats": "moment statistics JSON path",
    "model": "Cartesian parameter JSON path",
    "delta": "coupling magnitude threshold; weaker couplings are pruned",
    "template": "CSV of an M x N spin template in {-1,+1}",
    "f": "template bias strength added to the fields",
    "backend": "sampler backend: sa, sqa or reverse",
    "schedule": "annealing schedule CSV (s, A, B); bundled default if unset",
    "t_a_us": "nominal annealing time in microseconds (sa sweeps knob)",
    "j_c": "ferromagnetic chain strength for embedded sampling",
    "n_smpl": "number of anneals per sample set",
    "s_r": "reverse annealing reversal depth in (0, 1]",
    "t_r_ns": "reverse annealing hold time in nanoseconds",
    "topology": "hardware graph family: chimera, pegasus or zephyr",
    "topology_m": "hardware graph size parameter m",
    "target": "hardware graph edge list path (overrides topology fields)",
    "embedding": "embedding JSON path (embed output / sample input)",
    "axis": "sweep knob: f, delta, T_A, J_C, s_R, t_R or boundary",
    "grid": "sweep grid: 'lo:hi:count' or comma separated values",
    "n_copies": "cluster copies for the replicate subcommand",
    "learn_opts": "overrides for the learning loop (keys of LearnConfig)",
    "samples": "sample set JSONL path (eval input)",
    "seed": "master seed; mandatory for sample and sweep",
    "out": "output directory (default .)",
    "format": "report format: csv, json or svg",
}


@dataclass
class PipelineConfig:
    tracks: list = field(default_factory=list)
    marker_names: list = field(default_factory=list)
    bin_size: int = ingest.DEFAULT_BIN_SIZE
    binarize_threshold: float = None
    binarize_strict: bool = True
    incidence: str = None
    shape: list = None
    boundary: str = "periodic"
    denominator: str = "valid"
    stats: str = None
    model: str = None
    delta: float = 0.0
    template: str = None
    f: float = 0.0
    backend: str = "sa"
    schedule: str = None
    t_a_us: float = 1.0
    j_c: float = 1.0
    n_smpl: int = 100
    s_r: float = 0.4
    t_r_ns: float = 200.0
    topology: str = "pegasus"
    topology_m: int = 4
    target: str = None
    embedding: str = None
    axis: str = None
    grid: str = None
    n_copies: int = 2
    learn_opts: dict = field(default_factory=dict)
    samples: str = None
    seed: int = None
    out: str = "."
    format: str = "json"


class ConfigError(ValueError):
    """Carries the full list of violated config fields."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def documented_fields_match():
    """True when CONFIG_FIELDS and PipelineConfig agree key for key."""
    return set(CONFIG_FIELDS) == {f.name for f in fields(PipelineConfig)}


def load_config(path=None, overrides=None):
    cfg = PipelineConfig()
    problems = []
    doc = {}
    if path is not None:
        with open(path) as fh:
            doc = json.load(fh)
    for source in (doc, overrides or {}):
        for key, val in source.items():
            if val is None:
                continue
            if not hasattr(cfg, key):
                problems.append(f"unknown config field {key!r}")
            else:
                setattr(cfg, key, val)
    if problems:
        raise ConfigError(problems)
    return cfg


def require(cfg, names):
    """Check every needed field, then report all violations together."""
    problems = []
    for name in names:
        val = getattr(cfg, name)
        if val is None or (isinstance(val, list) and not val):
            problems.append(f"missing required config field {name!r}")
    if cfg.boundary not in ("periodic", "open"):
        problems.append(f"boundary must be periodic or open, got {cfg.boundary!r}")
    if cfg.format not in ("csv", "json", "svg"):
        problems.append(f"format must be csv, json or svg, got {cfg.format!r}")
    if "backend" in names and cfg.backend not in ("sa", "sqa", "reverse"):
        problems.append(f"backend must be sa, sqa or reverse, got {cfg.backend!r}")
    if "shape" in names and cfg.shape is not None and len(cfg.shape) != 3:
        problems.append("shape must be a [M, N, L] triple")
    if problems:
        raise ConfigError(problems)


def parse_grid(text):
    """'lo:hi:count' -> linspace; otherwise comma separated literals."""
    if ":" in text:
        lo, hi, count = text.split(":")
        return [float(v) for v in np.linspace(float(lo), float(hi), int(count))]
    vals = [v.strip() for v in text.split(",") if v.strip()]
    try:
        return [float(v) for v in vals]
    except ValueError:
        return vals


AXIS_ALIASES = {"JC": "J_C", "TA": "T_A", "sR": "s_R", "tR": "t_R",
                "d": "delta"}


def load_template(path, shape):
    with open(path, newline="") as fh:
        rows = [[int(float(v)) for v in r] for r in csv.reader(fh) if r]
    A = np.asarray(rows)
    if np.all(np.isin(A, (0, 1))):
        A = 2 * A - 1
    if A.shape != (shape.M, shape.N):
        raise ConfigError([f"template shape {A.shape} does not match model "
                           f"({shape.M}, {shape.N})"])
    return A


def _shape(cfg):
    M, N, L = cfg.shape
    return model.ModelShape(int(M), int(N), int(L), cfg.boundary)


def _load_ising(cfg):
    """Model JSON -> thresholded, optionally biased IsingModel."""
    shape, params = model.load_model_json(cfg.model)
    if cfg.shape is None:
        cfg.shape = [shape.M, shape.N, shape.L]
        cfg.boundary = shape.boundary
    ising = model.qubo_to_ising(model.build_qubo(shape, params))
    if cfg.delta > 0:
        ising = model.apply_threshold(ising, cfg.delta)
    if cfg.template is not None and cfg.f > 0:
        A = load_template(cfg.template, shape)
        ising = model.apply_bias(ising, model.TemplateBias(A, cfg.f))
    return shape, ising


def _target_graph(cfg):
    if cfg.target is not None:
        return topology.read_edge_list(cfg.target)
    return topology.build_hardware(cfg.topology, int(cfg.topology_m))


def _backend_params(cfg, shape):
    params = {}
    if cfg.backend == "sa":
        params["sweeps"] = max(int(cfg.t_a_us * sampler.SWEEPS_PER_MICROSECOND), 1)
    elif cfg.backend == "sqa":
        if cfg.schedule is not None:
            params["schedule"] = sampler.AnnealSchedule.from_csv(cfg.schedule)
    elif cfg.backend == "reverse":
        if cfg.template is None:
            raise ConfigError(["reverse backend requires a template"])
        A = load_template(cfg.template, shape)
        params["rs"] = sampler.ReverseSchedule(
            cfg.s_r, cfg.t_r_ns, model.TemplateBias(A, 0.0).flat())
    return params


def _svg_scatter(x, y, path, title=""):
    """Minimal log-log scatter of sampled against empirical statistics."""
    size, pad = 360, 40
    lo = min(min(x), min(y))
    hi = max(max(x), max(y))
    span = (hi - lo) or 1.0

    def px(v):
        return pad + (v - lo) / span * (size - 2 * pad)

    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" '
             f'height="{size}">',
             f'<text x="{size // 2}" y="16" text-anchor="middle" '
             f'font-size="12">{title}</text>',
             f'<line x1="{px(lo)}" y1="{size - px(lo)}" x2="{px(hi)}" '
             f'y2="{size - px(hi)}" stroke="#999"/>']
    for xi, yi in zip(x, y):
        lines.append(f'<circle cx="{px(xi):.1f}" cy="{size - px(yi):.1f}" '
                     'r="3" fill="#1f77b4" fill-opacity="0.6"/>')
    lines.append("</svg>")
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# subcommand handlers: each returns the dict printed as the summary line
# ---------------------------------------------------------------------------

def cmd_ingest(cfg, out):
    require(cfg, ["tracks", "binarize_threshold"])
    names = cfg.marker_names or [Path(p).stem for p in cfg.tracks]
    rows = []
    for path, name in zip(cfg.tracks, names):
        with open(path) as fh:
            track = ingest.parse_bedgraph(fh, marker_name=name)
        binned = ingest.bin_signal(track, bin_size=int(cfg.bin_size))
        rows.append(ingest.binarize(binned, cfg.binarize_threshold,
                                    strict=cfg.binarize_strict))
    matrix = ingest.assemble(
        [(n, r) for n, r in zip(names, rows)])
    dest = out / "incidence.csv"
    matrix.to_csv(dest)
    return {"M": matrix.M, "N": matrix.N, "outputs": [str(dest)]}


def cmd_stats(cfg, out):
    require(cfg, ["incidence", "shape"])
    matrix = ingest.IncidenceMatrix.from_csv(cfg.incidence)
    shape = _shape(cfg)
    summary = stats.compute_stats(matrix, shape.L, cfg.boundary,
                                  cfg.denominator)
    dest = out / ("stats.csv" if cfg.format == "csv" else "stats.json")
    (summary.to_csv if cfg.format == "csv" else summary.to_json)(dest)
    return {"M": summary.M, "L": summary.L, "outputs": [str(dest)]}


def cmd_learn(cfg, out):
    require(cfg, ["stats", "shape"])
    target = stats.StatsSummary.from_json(cfg.stats)
    shape = _shape(cfg)
    opts = dict(cfg.learn_opts)
    if cfg.seed is not None:
        opts.setdefault("rng_seed", int(cfg.seed))
    lc = learn.LearnConfig(**opts)
    params, trace = learn.learn_params(target, shape, lc,
                                       denominator=cfg.denominator)
    dest = out / "model.json"
    model.save_model_json(dest, shape, params)
    trace_dest = out / "learn_trace.csv"
    trace.to_csv(trace_dest)
    return {"converged": trace.converged, "iterations": len(trace),
            "final_error": trace.total_error[-1],
            "outputs": [str(dest), str(trace_dest)]}


def cmd_build(cfg, out):
    require(cfg, ["model"])
    shape, ising = _load_ising(cfg)
    dest = out / "ising.txt"
    model.write_ising_edge_list(ising, dest)
    return {"num_vars": ising.num_vars, "num_couplings": len(ising.J),
            "offset": ising.offset, "outputs": [str(dest)]}


def cmd_topology(cfg, out):
    require(cfg, ["topology", "topology_m"])
    hw = topology.build_hardware(cfg.topology, int(cfg.topology_m))
    dest = out / f"{cfg.topology}_{cfg.topology_m}.txt"
    topology.write_edge_list(hw, dest, kind=hw.kind, m=hw.m)
    gm = topology.metrics(hw)
    return {"nodes": gm.num_nodes, "edges": gm.num_edges,
            "gamma": gm.gamma, "avg_degree": gm.avg_degree,
            "outputs": [str(dest)]}


def cmd_embed(cfg, out):
    require(cfg, ["model", "seed"])
    shape, ising = _load_ising(cfg)
    source = topology.objective_graph(ising)
    target = _target_graph(cfg)
    e = emb.find_embedding(source, target, seed=int(cfg.seed))
    dest = out / "embedding.json"
    e.to_json(dest)
    cm = emb.chain_metrics(e, target)
    cm_dest = out / "chain_metrics.csv"
    cm.to_csv(cm_dest)
    return {"chains": len(e.chains), "mean_chain": cm.mean_length(),
            "max_chain": cm.max_length(),
            "outputs": [str(dest), str(cm_dest)]}


def cmd_sample(cfg, out):
    require(cfg, ["model", "seed", "backend"])
    shape, ising = _load_ising(cfg)
    params = _backend_params(cfg, shape)
    physical = None
    if cfg.embedding is not None:
        target = _target_graph(cfg)
        e = emb.Embedding.from_json(cfg.embedding)
        physical = emb.embed_ising(ising, e, target, cfg.j_c)
    sset = sampler.sample_many(cfg.backend, ising, int(cfg.n_smpl),
                               master_seed=int(cfg.seed), params=params,
                               physical=physical)
    dest = out / "samples.jsonl"
    sset.to_jsonl(dest)
    csv_dest = out / "samples.csv"
    sset.to_csv(csv_dest)
    summary = {"records": len(sset), "min_energy": float(sset.energies().min()),
               "outputs": [str(dest), str(csv_dest)]}
    if physical is not None:
        summary["break_rate"] = sset.mean_break_fraction()
    return summary


def cmd_eval(cfg, out):
    require(cfg, ["stats", "samples", "shape"])
    empirical = stats.StatsSummary.from_json(cfg.stats)
    shape = _shape(cfg)
    sset = sampler.SampleSet.from_jsonl(cfg.samples)
    sampled = stats.stats_of_samples(sset.binary_states(), sset.occurrences(),
                                     shape, cfg.denominator)
    doc = {"r2": ev.r2_log(empirical, sampled)}
    if cfg.template is not None:
        A = load_template(cfg.template, shape)
        flat = model.TemplateBias(A, 0.0).flat()
        spins = 2.0 * sset.binary_states() - 1.0
        d = [ev.rel_hamming(flat, s, shape.M, shape.N) for s in spins]
        doc.update(d_mean=float(np.average(d, weights=sset.occurrences())),
                   d_min=min(d), d_max=max(d))
    dest = out / "eval.json"
    with open(dest, "w") as fh:
        json.dump(doc, fh, indent=1)
    outputs = [str(dest)]
    if cfg.format == "svg":
        eps = 1e-4
        svg_dest = out / "eval_scatter.svg"
        _svg_scatter(np.log10(np.maximum(empirical.flatten(), eps)),
                     np.log10(np.maximum(sampled.flatten(), eps)),
                     svg_dest, title="sampled vs empirical (log10)")
        outputs.append(str(svg_dest))
    return {**doc, "outputs": outputs}


def cmd_sweep(cfg, out):
    require(cfg, ["model", "stats", "axis", "grid", "seed"])
    axis = AXIS_ALIASES.get(cfg.axis, cfg.axis)
    grid = parse_grid(cfg.grid)
    shape, ising = _load_ising(cfg)
    ctx = ev.SweepContext(
        model=ising, shape=shape,
        empirical=stats.StatsSummary.from_json(cfg.stats),
        backend=cfg.backend, backend_params=_backend_params(cfg, shape),
        n_smpl=int(cfg.n_smpl), master_seed=int(cfg.seed),
        t_r_ns=cfg.t_r_ns, s_r=cfg.s_r)
    if cfg.template is not None:
        ctx.template = load_template(cfg.template, shape)
    if axis == "J_C":
        ctx.target = _target_graph(cfg)
        if cfg.embedding is not None:
            ctx.embedding = emb.Embedding.from_json(cfg.embedding)
        else:
            ctx.embedding = emb.find_embedding(
                topology.objective_graph(ising), ctx.target,
                seed=int(cfg.seed))
    if axis == "boundary":
        _, params = model.load_model_json(cfg.model)

        def builder(bnd):
            s = model.ModelShape(shape.M, shape.N, shape.L, bnd)
            return model.qubo_to_ising(model.build_qubo(s, params))

        ctx.builder = builder
    report = ev.sweep(axis, grid, ctx)
    dest = out / f"sweep_{axis}.csv"
    report.to_csv(dest)
    outputs = [str(dest)]
    if cfg.format == "json":
        json_dest = out / f"sweep_{axis}.json"
        report.to_json(json_dest)
        outputs.append(str(json_dest))
    return {"axis": axis, "rows": len(report.rows), "outputs": outputs}


def cmd_replicate(cfg, out):
    require(cfg, ["model", "n_copies"])
    shape, ising = _load_ising(cfg)
    source = topology.objective_graph(ising)
    cluster, node_map = emb.replicate_cluster(source, int(cfg.n_copies))
    dest = out / "cluster.txt"
    topology.write_edge_list(cluster, dest, kind="cluster", m=int(cfg.n_copies))
    map_dest = out / "cluster_map.csv"
    with open(map_dest, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cluster_node", "copy", "source_node"])
        for i, (copy, src) in enumerate(node_map):
            w.writerow([i, copy, src])
    return {"copies": int(cfg.n_copies), "nodes": cluster.num_nodes,
            "edges": len(cluster.edges),
            "outputs": [str(dest), str(map_dest)]}


HANDLERS = {
    "ingest": cmd_ingest,
    "stats": cmd_stats,
    "learn": cmd_learn,
    "build": cmd_build,
    "topology": cmd_topology,
    "embed": cmd_embed,
    "sample": cmd_sample,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "replicate": cmd_replicate,
}


def build_parser():
    epilog = "config fields:\n" + "\n".join(
        f"  {k:<20} {v}" for k, v in CONFIG_FIELDS.items())
    parser = argparse.ArgumentParser(
        prog="tadsampler", epilog=epilog,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in HANDLERS:
        p = sub.add_parser(name, help=f"run the {name} stage")
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help=CONFIG_FIELDS["seed"])
        p.add_argument("--out", help=CONFIG_FIELDS["out"])
        p.add_argument("--format", choices=("csv", "json", "svg"),
                       help=CONFIG_FIELDS["format"])
        p.add_argument("--axis", help=CONFIG_FIELDS["axis"])
        p.add_argument("--grid", help=CONFIG_FIELDS["grid"])
        p.add_argument("--set", action="append", default=[], metavar="KEY=VAL",
                       help="override any config field (JSON literal value)")
    return parser


def _flag_overrides(args):
    overrides = {}
    for key in ("seed", "out", "format", "axis", "grid"):
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = val
    for item in args.set:
        key, _, raw = item.partition("=")
        if not _:
            raise ConfigError([f"--set expects KEY=VALUE, got {item!r}"])
        try:
            overrides[key] = json.loads(raw)
        except json.JSONDecodeError:
            overrides[key] = raw
    return overrides


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, _flag_overrides(args))
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        summary = HANDLERS[args.command](cfg, out)
    except ConfigError as exc:
        print(json.dumps({"command": args.command, "status": "error",
                          "errors": exc.problems}))
        return 2
    except Exception as exc:
        print(json.dumps({"command": args.command, "status": "error",
                          "errors": [f"{type(exc).__name__}: {exc}"]}))
        return 1
    print(json.dumps({"command": args.command, "status": "ok", **summary}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
