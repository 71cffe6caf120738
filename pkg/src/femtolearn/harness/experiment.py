"""Multi-seed runs, parameter sweeps, CSV output and paired regime comparison."""

from __future__ import annotations

import csv
import math
import traceback
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.stats import binomtest

from ..learning import RUNNERS, RunTrace
from ..learning.runners import NONCOOP, RLHPA1, RLHPA2
from ..oracle import NoPureNashError, cooperative_benchmark, stackelberg_equilibrium
from .config import COOPERATIVE, LEARNERS, ORACLE, ExperimentConfig

COOPERATIVE_MAX = "cooperative_max"

ROW_FIELDS = ["regime", "seed", "sweep_parameter", "sweep_value", "user", "expected_utility",
              "expected_sinr", "oracle_utility", "oracle_rel_error", "drift", "converged",
              "followers_active", "status", "trace_file"]
AGG_FIELDS = ["regime", "sweep_value", "user", "n", "utility_mean", "utility_std", "sinr_mean",
              "sinr_std", "converged_share"]

# (better, worse): the first regime is expected to do at least as well
DEFAULT_PAIRS = [(RLHPA2, RLHPA1), (RLHPA1, NONCOOP), (COOPERATIVE, RLHPA2)]


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return "" if x is None else str(x)


def trace_filename(regime, seed, sweep_index=None):
    tag = "" if sweep_index is None else f"_p{sweep_index:02d}"
    return f"trace_{regime}{tag}_seed{seed}.csv"


def write_trace_csv(trace: RunTrace, path):
    """One row per (episode, slot, user) in that order."""
    if trace.actions is None:
        raise ValueError("trace was recorded without slot data")
    width = max(trace.action_counts)
    K, T, n = trace.actions.shape
    header = ["episode", "slot", "user", "action_index", "realized_utility", "expected_utility",
              "expected_sinr"] + [f"prob_{j}" for j in range(width)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        acts = trace.actions.tolist()
        real = trace.realized_utility.tolist()
        eu = trace.slot_expected_utility.tolist()
        es = trace.slot_expected_sinr.tolist()
        probs = [p.tolist() for p in trace.slot_strategies]
        for k in range(K):
            for t in range(T):
                for i in range(n):
                    pi = probs[i][k][t]
                    w.writerow([k + 1, t + 1, i, acts[k][t][i], repr(real[k][t][i]), repr(eu[k][t][i]),
                                repr(es[k][t][i])] + [repr(p) for p in pi] + [""] * (width - len(pi)))


@dataclass
class SummaryReport:
    rows: List[dict]
    output_dir: Optional[Path] = None
    failures: List[str] = field(default_factory=list)
    files: List[Path] = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures

    def select(self, regime, sweep_value=None):
        return [r for r in self.rows if r["regime"] == regime and r["sweep_value"] == sweep_value]

    def regimes(self):
        return sorted({r["regime"] for r in self.rows})

    def sweep_values(self):
        seen = []
        for r in self.rows:
            if r["sweep_value"] not in seen:
                seen.append(r["sweep_value"])
        return seen

    def matrix(self, regime, key="expected_utility", sweep_value=None):
        """``{seed: array over users}`` for one regime."""
        out: Dict[int, np.ndarray] = {}
        rows = self.select(regime, sweep_value)
        for seed in sorted({r["seed"] for r in rows}):
            vals = sorted((r["user"], r[key]) for r in rows if r["seed"] == seed)
            out[seed] = np.array([v for _, v in vals], dtype=float)
        return out

    def aggregates(self):
        groups = {}
        for r in self.rows:
            if r["status"] == "failed":
                continue
            groups.setdefault((r["regime"], r["sweep_value"], r["user"]), []).append(r)
        out = []
        for (regime, sv, user), rows in groups.items():
            u = np.array([r["expected_utility"] for r in rows], dtype=float)
            s = np.array([r["expected_sinr"] for r in rows], dtype=float)
            conv = [r["converged"] for r in rows if r["converged"] is not None]
            out.append(dict(regime=regime, sweep_value=sv, user=user, n=len(rows),
                            utility_mean=float(u.mean()),
                            utility_std=float(u.std(ddof=1)) if len(u) > 1 else 0.0,
                            sinr_mean=float(s.mean()),
                            sinr_std=float(s.std(ddof=1)) if len(s) > 1 else 0.0,
                            converged_share=float(np.mean(conv)) if conv else None))
        return out

    def sweep_table(self, regimes=(RLHPA1, RLHPA2), users=None):
        """Mean expected SINR per sweep point, averaged over seeds and the given users (default: followers)."""
        table = []
        for sv in self.sweep_values():
            line = {"sweep_value": sv}
            for regime in regimes:
                rows = [r for r in self.select(regime, sv) if r["status"] != "failed"
                        and (r["user"] > 0 if users is None else r["user"] in users)]
                if rows:
                    line[regime] = float(np.mean([r["expected_sinr"] for r in rows]))
            table.append(line)
        return table


@dataclass
class Comparison:
    better: str
    worse: str
    user: int
    mean_difference: float
    relative_margin: float
    n: int
    positive: int
    negative: int
    p_value: Optional[float]

    def describe(self):
        p = "n/a" if self.p_value is None else f"{self.p_value:.3g}"
        return (f"user {self.user}: {self.better} - {self.worse} = {self.mean_difference:.6g} "
                f"({self.relative_margin:+.2%}), +{self.positive}/-{self.negative} of {self.n}, "
                f"sign-test p = {p}")


def compare_regimes(report: SummaryReport, pairs: Sequence = None, sweep_value=None,
                    key="expected_utility") -> List[Comparison]:
    """Paired-by-seed differences per user with two-sided sign-test p-values.

    ``relative_margin`` is the mean difference over the magnitude of the
    worse regime's mean. With a single paired seed the p-value is ``None``.
    """
    if pairs is None:
        pairs = list(DEFAULT_PAIRS)
        if report.select(COOPERATIVE_MAX, sweep_value):
            pairs.append((COOPERATIVE_MAX, RLHPA2))
    needed = {r for pair in pairs for r in pair}
    missing = sorted(r for r in needed if not report.select(r, sweep_value))
    if missing:
        raise ValueError(f"report has no rows for regime(s) {missing}")
    out = []
    for better, worse in pairs:
        a, b = report.matrix(better, key, sweep_value), report.matrix(worse, key, sweep_value)
        seeds = sorted(set(a) & set(b))
        if not seeds:
            raise ValueError(f"no seeds shared by {better} and {worse}")
        diff = np.array([a[s] - b[s] for s in seeds])
        base = np.mean([b[s] for s in seeds], axis=0)
        for user in range(diff.shape[1]):
            d = diff[:, user]
            pos, neg = int(np.sum(d > 0)), int(np.sum(d < 0))
            if len(seeds) < 2:
                p = None
            elif pos + neg == 0:
                p = 1.0
            else:
                p = float(binomtest(pos, pos + neg, 0.5).pvalue)
            mean = float(d.mean())
            margin = mean / abs(base[user]) if base[user] != 0 else (0.0 if mean == 0 else math.copysign(math.inf, mean))
            out.append(Comparison(better, worse, user, mean, margin, len(seeds), pos, neg, p))
    return out


def _learning_rows(trace: RunTrace, ref, cfg: ExperimentConfig, active, full_users):
    e = cfg.section("experiment")
    fu = trace.final_expected_utility()
    fs = trace.final_expected_sinr()
    drift = trace.strategy_drift(e["drift_window"])
    rows = []
    for i in range(full_users):
        if i < trace.num_users:
            u, s, d = float(fu[i]), float(fs[i]), float(drift[i])
        else:
            u, s, d = 0.0, 0.0, 0.0
        r = dict(expected_utility=u, expected_sinr=s, drift=d, converged=bool(d < e["drift_tolerance"]),
                 status="ok" if i < trace.num_users else "inactive")
        if ref is not None:
            r["oracle_utility"] = ref[i]
            r["oracle_rel_error"] = abs(u - ref[i]) / abs(ref[i]) if ref[i] != 0 else (0.0 if u == 0 else math.inf)
        rows.append(r)
    return rows


def _pad(values, n):
    return list(values) + [0.0] * (n - len(values))


def run_experiment(cfg: ExperimentConfig, out_dir=None, write=True, log=None) -> SummaryReport:
    """Run every (sweep point, seed, regime) combination and write CSV and text summaries.

    A failing run is recorded (status ``failed``) and the rest carry on.
    """
    log = log or (lambda msg: None)
    out = cfg.output_dir(out_dir) if write else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    sweep = cfg.sweep
    points = [(None, None, cfg)]
    if sweep is not None:
        (section, key), values = sweep
        points = [(i, v, cfg.with_value(section, key, v)) for i, v in enumerate(values)]
    sweep_name = None if sweep is None else f"{sweep[0][0]}.{sweep[0][1]}"
    selector = cfg.section("experiment")["ne_selector"]
    report = SummaryReport(rows=[], output_dir=out)

    for index, value, pcfg in points:
        for seed in cfg.seeds:
            base = dict(seed=seed, sweep_parameter=sweep_name, sweep_value=value)
            try:
                sc, active = pcfg.scenario(seed)
                n_full = sc.num_users if active else 1 + pcfg.section("scenario")["num_femtocells"]
                se = stackelberg_equilibrium(sc, selector, strict=False)
                ref = _pad(se.utilities, n_full)
                se_status = "ok" if se.is_pure_ne else f"no_pure_ne{se.missing}"
            except NoPureNashError as err:
                se, ref, se_status = None, None, f"no_pure_ne{err.leader_actions}"
            except Exception as err:  # noqa: BLE001 - recorded and reported, run continues
                report.failures.append(f"seed {seed} sweep {value}: scenario: {err}")
                log(traceback.format_exc())
                continue
            for regime in cfg.regimes:
                label = f"{regime} seed {seed}" + ("" if value is None else f" {sweep_name}={value}")
                try:
                    if regime in LEARNERS:
                        trace = RUNNERS[regime](sc, pcfg.learning(seed, record_slots=write and cfg.write_traces))
                        fname = None
                        if write and cfg.write_traces:
                            fname = trace_filename(regime, seed, index)
                            write_trace_csv(trace, out / fname)
                            report.files.append(out / fname)
                        for i, r in enumerate(_learning_rows(trace, ref, pcfg, active, n_full)):
                            report.rows.append(dict(base, regime=regime, user=i, trace_file=fname,
                                                    followers_active=active, **r))
                    elif regime == ORACLE:
                        if se is None:
                            vals = [math.nan] * n_full
                            sinrs = [math.nan] * n_full
                        else:
                            vals = ref
                            sinrs = _pad([float(sc.table.sinr[i][se.profile]) for i in range(sc.num_users)], n_full)
                        for i in range(n_full):
                            report.rows.append(dict(base, regime=ORACLE, user=i, expected_utility=vals[i],
                                                    expected_sinr=sinrs[i], converged=None,
                                                    followers_active=active, status=se_status))
                    elif regime == COOPERATIVE:
                        co = cooperative_benchmark(sc)
                        sinrs = _pad([float(sc.table.sinr[i][co.actions]) for i in range(sc.num_users)], n_full)
                        for name, vals in ((COOPERATIVE, co.utilities), (COOPERATIVE_MAX, co.per_user_max)):
                            vals = _pad(vals, n_full)
                            for i in range(n_full):
                                report.rows.append(dict(base, regime=name, user=i, expected_utility=vals[i],
                                                        expected_sinr=sinrs[i] if name == COOPERATIVE else math.nan,
                                                        converged=None, followers_active=active, status="ok"))
                    log(f"done {label}")
                except Exception as err:  # noqa: BLE001
                    report.failures.append(f"{label}: {err}")
                    report.rows.append(dict(base, regime=regime, user=-1, expected_utility=math.nan,
                                            expected_sinr=math.nan, converged=None,
                                            followers_active=None, status="failed"))
                    log(traceback.format_exc())
    for r in report.rows:
        for f in ROW_FIELDS:
            r.setdefault(f, None)
    if write:
        write_summary(report, out)
    return report


def write_summary(report: SummaryReport, out: Path):
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ROW_FIELDS)
        for r in report.rows:
            w.writerow([_fmt(r[f]) for f in ROW_FIELDS])
    aggs = report.aggregates()
    with open(out / "aggregates.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGG_FIELDS)
        for a in aggs:
            w.writerow([_fmt(a[f]) for f in AGG_FIELDS])
    (out / "summary.txt").write_text(render_summary(report, aggs))
    report.files.extend([out / "summary.csv", out / "aggregates.csv", out / "summary.txt"])


def render_summary(report: SummaryReport, aggs=None):
    aggs = report.aggregates() if aggs is None else aggs
    lines = ["Final expected utility (bit/s/W) and SINR, mean over seeds", ""]
    for sv in report.sweep_values():
        if sv is not None:
            name = next(r["sweep_parameter"] for r in report.rows if r["sweep_value"] == sv)
            lines.append(f"[{name} = {sv}]")
        for a in sorted((a for a in aggs if a["sweep_value"] == sv), key=lambda a: (a["regime"], a["user"])):
            conv = "" if a["converged_share"] is None else f"  converged {a['converged_share']:.0%}"
            lines.append(f"  {a['regime']:<16} user {a['user']}: utility {a['utility_mean']:.6g} "
                         f"(sd {a['utility_std']:.3g}, n={a['n']})  sinr {a['sinr_mean']:.6g}{conv}")
        flagged = sorted({(r["seed"], r["status"]) for r in report.rows
                          if r["sweep_value"] == sv and str(r["status"]).startswith("no_pure_ne")})
        for seed, status in flagged:
            lines.append(f"  seed {seed}: {status}")
        try:
            comps = compare_regimes(report, sweep_value=sv)
        except ValueError:
            comps = []
        if comps:
            lines.append("  paired comparison:")
            lines.extend("    " + c.describe() for c in comps)
        lines.append("")
    if len(report.sweep_values()) > 1:
        lines.append("Mean expected follower SINR per sweep point")
        for line in report.sweep_table():
            vals = "  ".join(f"{k} {v:.6g}" for k, v in line.items() if k != "sweep_value")
            lines.append(f"  {line['sweep_value']}: {vals}")
        lines.append("")
    if report.failures:
        lines.append("FAILED RUNS")
        lines.extend("  " + f for f in report.failures)
    return "\n".join(lines) + "\n"
