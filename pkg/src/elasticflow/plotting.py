"""Static figures for simulation and experiment reports (Agg backend, PNG bytes)."""

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 10,
    "legend.frameon": False,
}


def _png(fig):
    buf = io.BytesIO()
    fig.savefig(buf, format="png", bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return buf.getvalue()


def decay_figure(series, columns=("e", "ks2", "a", "dist"), fits=None, title=None):
    """Semi-log plot of the tracked quantities; dashed lines for fitted rates."""
    t = series.column("t")
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for name in columns:
            v = np.abs(series.column(name))
            ok = np.isfinite(v) & (v > 0)
            if ok.sum() < 2:
                continue
            (line,) = ax.semilogy(t[ok], v[ok], label=name)
            fit = (fits or {}).get(name)
            if fit is not None and fit.conclusive:
                a, b = fit.window
                sel = ok & (t >= a) & (t <= b)
                anchor = v[sel][0]
                ax.semilogy(t[sel], anchor * np.exp(-fit.rate * (t[sel] - t[sel][0])), "--",
                            color=line.get_color(), label=f"{name}: rate {fit.rate:.4g}")
        ax.set_xlabel("t")
        ax.set_ylabel("value")
        if title:
            ax.set_title(title)
        ax.legend()
        return _png(fig)


def curve_figure(curves, labels=None, title=None):
    """Overlay of closed curves given as complex sample arrays or :class:`ClosedCurve` objects."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 5))
        for i, c in enumerate(curves):
            z = c.z if hasattr(c, "z") else np.asarray(c)
            z = np.append(z, z[0])
            ax.plot(z.real, z.imag, label=None if labels is None else labels[i])
        ax.set_aspect("equal")
        if labels:
            ax.legend()
        if title:
            ax.set_title(title)
        return _png(fig)


def gap_figure(reports):
    """Lattice gap against the turning number, with the global infimum."""
    omegas = [r.omega for r in reports]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(omegas, [r.lambda_omega for r in reports], "o-", ms=3, label="lattice minimum")
        ax.axhline(1.75, color="k", lw=0.8, ls=":", label="7/4")
        ax.set_xlabel("turning number")
        ax.set_ylabel("gap")
        ax.legend()
        return _png(fig)
