"""PNG figures for CLI reports, rendered headless with the Agg backend."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .spin_model import KB  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 100,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "savefig.bbox": "tight",
}


def _save(fig, path):
    # no Software/date chunks, so reruns give identical bytes
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)


def plot_levels(diagram, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(diagram.B0, diagram.energies / KB, color="k", lw=0.8)
        ax.set_xlabel("B0 (T)")
        ax.set_ylabel("E / kB (K)")
        _save(fig, path)


def plot_crossings(records, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        B = [r.B0_star for r in records]
        gap = np.array([max(r.delta0, 1e-300) for r in records]) / KB
        ax.semilogy(B, gap, "o", ms=4)
        for r, g in zip(records, gap):
            ax.annotate(f"({r.m},{r.m_prime})", (r.B0_star, g), fontsize=6, xytext=(2, 2),
                        textcoords="offset points")
        ax.set_xlabel("B0* (T)")
        ax.set_ylabel("gap / kB (K)")
        _save(fig, path)


def plot_hysteresis(result, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        m = np.asarray(result.magnetization)
        # steps are often tiny next to |<Sz>| ~ S, so show the change from the start
        ax.step(result.field_grid, m - m[0], where="post")
        ax.set_xlabel("B0 (T)")
        ax.set_ylabel(f"<Sz> - ({m[0]:.6g})")
        ax.set_title(f"{result.sweep_rate:g} T/s, {result.temperature:g} K")
        _save(fig, path)


def plot_trajectories(trajectories, labels, path):
    with plt.rc_context(STYLE):
        fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(6.0, 5.5))
        for tr, label in zip(trajectories, labels):
            line, = top.plot(tr.tau, tr.intensity, label=label)
            bottom.plot(tr.tau, tr.Z, color=line.get_color(), ls=":")
        top.set_ylabel("intensity")
        top.legend(fontsize=8)
        bottom.set_ylabel("Z")
        bottom.set_xlabel("tau")
        _save(fig, path)


def plot_peaks(reports, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for rep in reports:
            ax.plot(rep.abscissa, rep.curve, label=f"v = {rep.v:g}")
        ax.set_xlabel("v tau")
        ax.set_ylabel("dM/dB0 (arb.)")
        ax.legend(fontsize=8)
        _save(fig, path)


def plot_t0_scan(rows, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        T = [r.temperature for r in rows]
        ax.semilogy(T, [r.T0_min for r in rows], "k-")
        for pair in dict.fromkeys((r.m, r.m_prime) for r in rows):
            sel = [r for r in rows if (r.m, r.m_prime) == pair]
            ax.semilogy([r.temperature for r in sel], [r.T0_min for r in sel], "o", ms=3,
                        label=f"{pair[0]} -> {pair[1]}")
        ax.set_xlabel("T (K)")
        ax.set_ylabel("min T0 (s)")
        ax.legend(fontsize=8)
        _save(fig, path)
