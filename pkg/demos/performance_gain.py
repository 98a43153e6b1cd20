"""Effect of shaping the feedback gain with the estimated inertia matrix.

The fixed-gain controller fights a configuration-dependent inertia, so
one task axis settles much later than the other.  Scaling the gain by
the current inertia estimate targets a uniform decay rate instead.  This
script runs both bundled configs and plots per-axis error decay with
settling markers, plus the applied torques.

Writes performance_gain.png next to this script.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from armtrack import compute_metrics, load_config, run_experiment

HERE = Path(__file__).resolve().parent


def main():
    runs = {}
    for name in ("inverse_jacobian", "inertia_gain"):
        print(f"running {name} ...")
        log = run_experiment(load_config(name))
        m = compute_metrics(log)
        print(f"  settling: overall {m.settling_time:.2f} s, "
              f"axis1 {m.settling_time_x:.2f} s, axis2 {m.settling_time_y:.2f} s")
        runs[name] = (log, m)

    fig, axes = plt.subplots(2, 2, figsize=(11, 7), sharex="col")

    for col, name in enumerate(("inverse_jacobian", "inertia_gain")):
        log, m = runs[name]
        ax = axes[0, col]
        ax.semilogy(log.t, np.abs(log.x_err[:, 0]) + 1e-12, label="axis 1")
        ax.semilogy(log.t, np.abs(log.x_err[:, 1]) + 1e-12, label="axis 2")
        for t_settle, color in ((m.settling_time_x, "C0"), (m.settling_time_y, "C1")):
            if np.isfinite(t_settle):
                ax.axvline(t_settle, color=color, lw=0.8, ls="--")
        ax.set_title(f"{name}: per-axis |error| (dashed: 5% settling)")
        ax.set_ylabel("|error| [m]")
        ax.set_ylim(1e-6, 1.0)
        ax.legend(fontsize=8)
        ax.grid(True, which="both", alpha=0.3)

        ax = axes[1, col]
        ax.plot(log.t, log.tau[:, 0], lw=0.7, label="joint 1")
        ax.plot(log.t, log.tau[:, 1], lw=0.7, label="joint 2")
        ax.set_xlabel("t [s]")
        ax.set_ylabel("torque [N m]")
        ax.legend(fontsize=8)

    fig.tight_layout()
    out = HERE / "performance_gain.png"
    fig.savefig(out, dpi=130)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
