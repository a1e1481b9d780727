"""Monte Carlo study harness.

Methods are named as in the result tables: ``KFSD_smo``, ``KFSD_tri``,
``KFSD_wei``, ``FBP+<depth>``, ``B_tri+<depth>`` and ``B_wei+<depth>``.
Within a replication every method sees the same dataset; each method draws
its randomness from a stream keyed by (model, alpha, replication, method),
so results do not depend on which other methods run or in what order.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .depths import DEPTH_IDS, DepthSpec, depth_all
from .detect import BootstrapConfig, DetectorConfig, bootstrap_detect, fbp_detect, kfsd_detect
from .errors import KFSDError
from .resample import rng_stream
from .serialize import canonical_json, config_hash, rows_to_csv
from .simgen import MODELS, alpha_key, gen_replication

KFSD_METHODS = ("KFSD_smo", "KFSD_tri", "KFSD_wei")


@dataclass(frozen=True)
class MethodSpec:
    """A detector by table name plus the knobs the study keeps fixed."""

    name: str
    projection_seed: int = 0
    tuning_J: int = 20
    B: int = 200
    sigma_percentile: Optional[float] = None

    def __post_init__(self):
        family, scheme, depth = parse_method(self.name)
        object.__setattr__(self, "name", canonical_method_name(family, scheme, depth))

    @property
    def family(self):
        return parse_method(self.name)[0]

    def depth_spec(self):
        _, _, depth = parse_method(self.name)
        return DepthSpec(depth, projection_seed=self.projection_seed)

    def run(self, sample, alpha, rng):
        family, scheme, depth = parse_method(self.name)
        if family == "kfsd":
            cfg = DetectorConfig.for_alpha(
                alpha, scheme=scheme, tuning_J=self.tuning_J,
                sigma_percentile=self.sigma_percentile,
            )
            return kfsd_detect(sample, cfg, rng)
        spec = self.depth_spec()
        if family == "fbp":
            return fbp_detect(sample, depth_all(sample, spec))
        bcfg = BootstrapConfig(B=self.B, scheme=scheme, alpha_T=alpha)
        return bootstrap_detect(sample, spec, bcfg, rng)


def parse_method(name):
    """``(family, scheme, depth)`` for a table method name."""
    text = name.strip()
    upper = text.upper()
    if upper.startswith("KFSD_"):
        scheme = text[5:].lower()
        if scheme not in ("smo", "tri", "wei"):
            raise KFSDError(f"unknown KFSD scheme in {name!r}")
        return "kfsd", scheme, "KFSD"
    if "+" not in text:
        raise KFSDError(f"cannot parse method {name!r}")
    head, depth = text.split("+", 1)
    depth = depth.strip().upper()
    if depth not in DEPTH_IDS:
        raise KFSDError(f"unknown depth {depth!r} in {name!r}")
    head = head.strip().upper()
    if head == "FBP":
        return "fbp", None, depth
    if head in ("B_TRI", "BTRI"):
        return "boot", "tri", depth
    if head in ("B_WEI", "BWEI"):
        return "boot", "wei", depth
    raise KFSDError(f"unknown method family in {name!r}")


def canonical_method_name(family, scheme, depth):
    if family == "kfsd":
        return f"KFSD_{scheme}"
    if family == "fbp":
        return f"FBP+{depth}"
    return f"B_{scheme}+{depth}"


def all_methods():
    names = [f"FBP+{d}" for d in DEPTH_IDS]
    names += [f"B_tri+{d}" for d in DEPTH_IDS]
    names += [f"B_wei+{d}" for d in DEPTH_IDS]
    return names + list(KFSD_METHODS)


def confusion(flags, truth):
    """``(tp, fn, fp, tn)`` of boolean flags against boolean ground truth."""
    flags = np.asarray(flags, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if flags.shape != truth.shape:
        raise KFSDError("flags and labels differ in length")
    tp = int(np.sum(flags & truth))
    fn = int(np.sum(~flags & truth))
    fp = int(np.sum(flags & ~truth))
    tn = int(np.sum(~flags & ~truth))
    return tp, fn, fp, tn


def method_key(name):
    return zlib.crc32(name.encode())


def method_rng(master_seed, model, alpha, r, name):
    return rng_stream(master_seed, MODELS.index(model) + 1, alpha_key(alpha), r, method_key(name))


def run_replication(dataset, method: MethodSpec, rng, alpha):
    """Confusion counts of one method on one labelled dataset."""
    report = method.run(dataset.sample, alpha, rng)
    return confusion(report.flags, dataset.is_outlier)


@dataclass
class Cell:
    tp: int = 0
    fn: int = 0
    fp: int = 0
    tn: int = 0
    replications: int = 0

    def add(self, counts):
        tp, fn, fp, tn = counts
        self.tp += tp
        self.fn += fn
        self.fp += fp
        self.tn += tn
        self.replications += 1

    @property
    def c(self):
        """Percentage of generated outliers flagged (pooled over replications)."""
        total = self.tp + self.fn
        return 100.0 * self.tp / total if total else None

    @property
    def f(self):
        """Percentage of generated normal curves flagged."""
        total = self.fp + self.tn
        return 100.0 * self.fp / total if total else None


@dataclass
class StudyResult:
    cells: dict = field(default_factory=dict)
    R: int = 0
    master_seed: int = 0
    config: dict = field(default_factory=dict)

    def cell(self, model, alpha, method):
        return self.cells[(model, alpha_key(alpha), method)]

    def rows(self):
        out = []
        for (model, akey, method), cell in sorted(
            self.cells.items(), key=lambda kv: (kv[0][0], kv[0][1], self._order(kv[0][2]))
        ):
            out.append({
                "model": model,
                "alpha": akey / 10000,
                "method": method,
                "c": cell.c,
                "f": cell.f,
                "tp": cell.tp,
                "fn": cell.fn,
                "fp": cell.fp,
                "tn": cell.tn,
                "replications": cell.replications,
            })
        return out

    def _order(self, method):
        methods = self.config.get("methods", [])
        return methods.index(method) if method in methods else len(methods)

    def to_dict(self):
        return {
            "rows": self.rows(),
            "R": self.R,
            "master_seed": self.master_seed,
            "config": self.config,
            "config_hash": config_hash(self.config),
        }

    def to_json(self):
        return canonical_json(self.to_dict())

    def to_csv(self):
        header = ["model", "alpha", "method", "c", "f", "tp", "fn", "fp", "tn",
                  "replications", "seed", "config_hash"]
        h = config_hash(self.config)
        rows = [
            [r["model"], r["alpha"], r["method"],
             "" if r["c"] is None else round(r["c"], 2),
             "" if r["f"] is None else round(r["f"], 2),
             r["tp"], r["fn"], r["fp"], r["tn"], r["replications"], self.master_seed, h]
            for r in self.rows()
        ]
        return rows_to_csv(header, rows)

    def to_text(self):
        """One block per model: methods down, ``c f`` for each alpha across."""
        rows = self.rows()
        models = sorted({r["model"] for r in rows})
        lines = [f"# seed={self.master_seed} R={self.R} config_hash={config_hash(self.config)}"]
        for model in models:
            mrows = [r for r in rows if r["model"] == model]
            alphas = sorted({r["alpha"] for r in mrows})
            methods = []
            for r in mrows:
                if r["method"] not in methods:
                    methods.append(r["method"])
            width = max(len(m) for m in methods) + 2
            lines.append("")
            lines.append(f"{model}, alpha = {{{', '.join(f'{a:g}' for a in alphas)}}}")
            head = " " * width + "".join(f"| alpha={a:<13g}" for a in alphas)
            lines.append(head)
            lines.append(" " * width + "".join(f"| {'c':>7} {'f':>7} " for _ in alphas))
            lines.append("-" * len(head))
            for method in methods:
                parts = [f"{method:<{width}}"]
                for a in alphas:
                    cell = self.cells.get((model, alpha_key(a), method))
                    if cell is None:
                        parts.append(f"| {'':>7} {'':>7} ")
                    else:
                        c = "-" if cell.c is None else f"{cell.c:.2f}"
                        f = "-" if cell.f is None else f"{cell.f:.2f}"
                        parts.append(f"| {c:>7} {f:>7} ")
                lines.append("".join(parts))
        return "\n".join(lines) + "\n"


def _replication_task(args):
    model, alpha, r, master_seed, n, noise, methods = args
    data = gen_replication(model, alpha, r, master_seed, n=n, noise=noise)
    out = []
    for m in methods:
        rng = method_rng(master_seed, model, alpha, r, m.name)
        out.append(run_replication(data, m, rng, alpha))
    return model, alpha, out


def run_study(models, alphas, methods, R=100, master_seed=0, n=50, threads=1,
              noise="pointwise", tuning_J=20, B=200, progress=None):
    """Pooled correct/false detection percentages for every (model, alpha, method).

    ``methods`` holds names or :class:`MethodSpec` objects. RTD/IDD use
    one projection set per study, seeded from ``master_seed``.
    """
    if R < 1:
        raise KFSDError("R must be at least 1")
    models = [m.upper() for m in models]
    for m in models:
        if m not in MODELS:
            raise KFSDError(f"unknown model {m!r}")
    specs = [
        m if isinstance(m, MethodSpec)
        else MethodSpec(m, projection_seed=master_seed, tuning_J=tuning_J, B=B)
        for m in methods
    ]
    config = {
        "models": models,
        "alphas": [float(a) for a in alphas],
        "methods": [s.name for s in specs],
        "R": R,
        "n": n,
        "noise": noise,
        "tuning_J": tuning_J,
        "B": B,
        "master_seed": master_seed,
    }
    result = StudyResult(R=R, master_seed=master_seed, config=config)
    for model in models:
        for a in alphas:
            for s in specs:
                result.cells[(model, alpha_key(a), s.name)] = Cell()
    tasks = [(model, a, r, master_seed, n, noise, specs)
             for model in models for a in alphas for r in range(R)]

    def merge(item):
        model, a, counts = item
        for s, c in zip(specs, counts):
            result.cells[(model, alpha_key(a), s.name)].add(c)
        if progress is not None:
            progress()

    if threads and threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for item in pool.map(_replication_task, tasks, chunksize=4):
                merge(item)
    else:
        for t in tasks:
            merge(_replication_task(t))
    return result


def ranking_hits(depth_values, is_outlier):
    """Number of outliers whose depth is among the ``n_out`` lowest.

    Depths are ordered ascending with ties broken by curve index.
    """
    depth_values = np.asarray(depth_values, dtype=float)
    is_outlier = np.asarray(is_outlier, dtype=bool)
    k = int(is_outlier.sum())
    if k == 0:
        return 0
    lowest = np.argsort(depth_values, kind="stable")[:k]
    return int(is_outlier[lowest].sum())


def ranking_experiment(model, depths, R=100, alpha=0.05, n=50, master_seed=0,
                       noise="pointwise", datasets=None):
    """Percentage of outliers ranked among the ``n_out`` least deep curves, per depth.

    ``depths`` are depth ids or :class:`DepthSpec` objects. Datasets without
    outliers are skipped.
    """
    specs = [d if isinstance(d, DepthSpec) else DepthSpec(d, projection_seed=master_seed)
             for d in depths]
    if datasets is None:
        datasets = [gen_replication(model, alpha, r, master_seed, n=n, noise=noise)
                    for r in range(R)]
    hits = {s.depth_id: 0 for s in specs}
    total = 0
    for data in datasets:
        if data.n_out == 0:
            continue
        total += data.n_out
        for s in specs:
            scores = depth_all(data.sample, s).values
            hits[s.depth_id] += ranking_hits(scores, data.is_outlier)
    if total == 0:
        raise KFSDError("no dataset contained an outlier")
    return {k: 100.0 * v / total for k, v in hits.items()}
