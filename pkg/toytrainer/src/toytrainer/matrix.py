"""Run the full variant x seed experiment matrix and report the trend.

The headline claim this harness exists to check: accuracy degrades as the
shuffle width grows (plain > ms2 > ms4 > ms8 on median mIoU), the plain
baseline beats every encrypted variant, and overall pixel accuracy is the
most robust of the three metrics. The report states each of these and the
run fails loudly if the completed matrix contradicts them beyond the
allowed slack (one adjacent inversion of at most 1.0 point).
"""

from __future__ import annotations

import json
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from . import shapes
from .config import ExperimentConfig, variant_sub_block_size
from .errors import HarnessError, IncompleteMatrixError
from .train import RunResult, train_and_eval

ADJACENT_INVERSION_SLACK = 1.0  # points of median mIoU


@dataclass(frozen=True)
class MatrixRow:
    variant: str
    seed: int
    aacc: float
    miou: float
    macc: float


@dataclass
class TrendReport:
    applicable: bool
    medians: dict[str, tuple[float, float, float]]  # variant -> (aAcc, mIoU, mAcc)
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass
class MatrixResult:
    rows: list[MatrixRow]
    trend: TrendReport
    text_report: str
    machine_report: str
    results: list[RunResult] = field(default_factory=list)
    elapsed_seconds: float = 0.0


def _median3(rows: list[MatrixRow]) -> tuple[float, float, float]:
    return (
        statistics.median(r.aacc for r in rows),
        statistics.median(r.miou for r in rows),
        statistics.median(r.macc for r in rows),
    )


def build_trend_report(config: ExperimentConfig, rows: list[MatrixRow]) -> TrendReport:
    """Medians per variant plus trend violations, for a complete matrix.

    Every (variant, seed) cell declared by the config must be present
    exactly once; anything missing raises IncompleteMatrixError. The trend
    is only asserted when there is something to compare: a plain baseline
    and at least one encrypted variant.
    """
    want = {(v, s) for v in config.variants() for s in config.train_seeds}
    have = {(r.variant, r.seed) for r in rows}
    if len(have) != len(rows):
        dupes = sorted({c for c in have if sum((r.variant, r.seed) == c for r in rows) > 1})
        raise IncompleteMatrixError(f"duplicate matrix cells: {dupes}")
    missing = sorted(want - have)
    extra = sorted(have - want)
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing cells: {missing}")
        if extra:
            parts.append(f"unexpected cells: {extra}")
        raise IncompleteMatrixError("; ".join(parts))

    for r in rows:
        if r.miou > r.macc + 1e-9:
            raise HarnessError(
                f"mIoU {r.miou} exceeds mAcc {r.macc} for {r.variant} seed {r.seed}; "
                "per-class IoU can never exceed recall"
            )

    medians = {
        v: _median3([r for r in rows if r.variant == v]) for v in config.variants()
    }
    encrypted = [v for v in config.variants() if v != "plain"]
    applicable = "plain" in medians and len(encrypted) >= 1
    report = TrendReport(applicable=applicable, medians=medians)
    if not applicable:
        return report

    # Chain in expected-quality order: plain, then finest shuffle first.
    chain = ["plain"] + sorted(encrypted, key=lambda v: variant_sub_block_size(v))
    miou = {v: medians[v][1] for v in chain}

    inversions = []
    for left, right in zip(chain, chain[1:]):
        if miou[right] > miou[left]:
            inversions.append((left, right, miou[right] - miou[left]))
    if len(inversions) > 1:
        report.violations.append(
            "more than one adjacent inversion in the median mIoU ordering: "
            + ", ".join(f"{b} > {a} by {d:.2f}" for a, b, d in inversions)
        )
    elif inversions and inversions[0][2] > ADJACENT_INVERSION_SLACK:
        a, b, d = inversions[0]
        report.violations.append(
            f"adjacent inversion {b} > {a} by {d:.2f} points exceeds the "
            f"{ADJACENT_INVERSION_SLACK:.1f}-point allowance"
        )

    for v in encrypted:
        if medians[v][1] >= miou["plain"]:
            report.violations.append(
                f"plain baseline median mIoU {miou['plain']:.2f} does not exceed "
                f"{v}'s {medians[v][1]:.2f}"
            )

    worst_aacc_drop = max(medians["plain"][0] - medians[v][0] for v in encrypted)
    worst_miou_drop = max(medians["plain"][1] - medians[v][1] for v in encrypted)
    worst_macc_drop = max(medians["plain"][2] - medians[v][2] for v in encrypted)
    if worst_aacc_drop > worst_miou_drop or worst_aacc_drop > worst_macc_drop:
        report.violations.append(
            f"aAcc degrades more than the mean metrics (drops: aAcc {worst_aacc_drop:.2f}, "
            f"mIoU {worst_miou_drop:.2f}, mAcc {worst_macc_drop:.2f})"
        )
    return report


def format_reports(config: ExperimentConfig, rows: list[MatrixRow], trend: TrendReport) -> tuple[str, str]:
    """(text table, tab-delimited records) for one completed matrix."""
    text = ["variant   seed    aAcc    mIoU    mAcc"]
    machine = []
    for r in rows:
        text.append(f"{r.variant:<9} {r.seed:>4} {r.aacc:>7.2f} {r.miou:>7.2f} {r.macc:>7.2f}")
        machine.append(f"run\t{r.variant}\t{r.seed}\t{r.aacc:.2f}\t{r.miou:.2f}\t{r.macc:.2f}")
    text.append("")
    text.append("medians:")
    for v in config.variants():
        if v not in trend.medians:
            continue
        a, i, m = trend.medians[v]
        text.append(f"{v:<9}      {a:>7.2f} {i:>7.2f} {m:>7.2f}")
        machine.append(f"median\t{v}\t{a:.2f}\t{i:.2f}\t{m:.2f}")
    if trend.applicable:
        verdict = "holds" if trend.ok else "VIOLATED"
        text.append("")
        text.append(f"trend (accuracy falls as shuffle width grows): {verdict}")
        machine.append(f"trend\t{'ok' if trend.ok else 'violated'}\t{len(trend.violations)}")
        for v in trend.violations:
            text.append(f"  - {v}")
            machine.append(f"violation\t{v}")
    else:
        text.append("")
        text.append("trend: not applicable (need a plain baseline and an encrypted variant)")
        machine.append("trend\tn/a\t0")
    return "\n".join(text) + "\n", "\n".join(machine) + "\n"


def render_trend_figure(config: ExperimentConfig, rows: list[MatrixRow], trend: TrendReport, path: Path) -> None:
    order = [v for v in config.variants() if v in trend.medians]
    x = range(len(order))
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for mi, (label, style) in enumerate((("aAcc", "o-"), ("mIoU", "s-"), ("mAcc", "^-"))):
        ax.plot(x, [trend.medians[v][mi] for v in order], style, label=f"median {label}")
    for r in rows:
        ax.plot(order.index(r.variant), r.miou, ".", color="gray", markersize=4)
    ax.set_xticks(list(x), order)
    ax.set_xlabel("variant (shuffle width grows to the right)")
    ax.set_ylabel("percent")
    ax.set_ylim(0, 105)
    ax.set_title("segmentation quality vs shuffle width")
    ax.legend(loc="lower left")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def run_experiment_matrix(
    config: ExperimentConfig, out_dir: Path, quiet: bool = False
) -> MatrixResult:
    """Generate data if needed, train every variant x seed cell, report.

    Writes under out_dir: data/ (shapes dataset), runs/<variant>-s<seed>/,
    report.txt, report.tsv, rows.json, trend.png.
    """
    config.validate()
    out_dir = Path(out_dir)
    data_dir = out_dir / "data"
    if not (data_dir / shapes.SUMMARY_NAME).exists():
        if not quiet:
            print(f"generating shapes dataset under {data_dir} ...")
        shapes.generate_shapes_dataset(config, data_dir)

    work_dir = out_dir / "variant-data"
    rows: list[MatrixRow] = []
    results: list[RunResult] = []
    t0 = time.monotonic()
    for variant in config.variants():
        for seed in config.train_seeds:
            if not quiet:
                print(f"=== {variant} seed {seed} ===")
            res = train_and_eval(
                config,
                variant,
                data_dir,
                out_dir / "runs" / f"{variant}-s{seed}",
                seed,
                work_dir=work_dir,
                quiet=quiet,
            )
            results.append(res)
            rows.append(MatrixRow(*res.row()))
    elapsed = time.monotonic() - t0

    trend = build_trend_report(config, rows)
    text, machine = format_reports(config, rows, trend)
    text += f"\ntotal wall time: {elapsed:.0f}s\n"
    (out_dir / "report.txt").write_text(text)
    (out_dir / "report.tsv").write_text(machine)
    (out_dir / "rows.json").write_text(
        json.dumps([r.__dict__ for r in rows], indent=2, sort_keys=True)
    )
    render_trend_figure(config, rows, trend, out_dir / "trend.png")
    if not quiet:
        print(text)
    return MatrixResult(
        rows=rows,
        trend=trend,
        text_report=text,
        machine_report=machine,
        results=results,
        elapsed_seconds=elapsed,
    )
