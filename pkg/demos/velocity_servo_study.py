"""Velocity-command tracking versus joint-servo stiffness.

The velocity-command mode sends the adaptive reference velocity to an
inner gravity-compensated proportional servo instead of computing torque
directly.  Tracking then hinges on how tightly the servo holds the
commanded velocity: this script sweeps the servo gain and plots the
task-error norm and the velocity-tracking energy for each setting.

Writes velocity_servo_study.png next to this script.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from armtrack import compute_metrics, load_config, run_experiment

HERE = Path(__file__).resolve().parent
GAINS = (50.0, 200.0, 1000.0)


def main():
    logs = {}
    for gain in GAINS:
        cfg = load_config("velocity_command")
        cfg.servo_gain = gain
        print(f"running servo gain {gain:g} ...")
        log = run_experiment(cfg)
        m = compute_metrics(log)
        print(f"  steady-state error {m.steady_state_error * 1000:.2f} mm, "
              f"int ||s||^2 = {m.s_squared_integral:.4f}")
        logs[gain] = (log, m)

    fig, axes = plt.subplots(1, 2, figsize=(11, 4))

    ax = axes[0]
    for gain in GAINS:
        log, _ = logs[gain]
        ax.semilogy(log.t, np.linalg.norm(log.x_err, axis=1),
                    label=f"servo gain {gain:g}")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("||task error|| [m]")
    ax.set_title("task error vs servo stiffness")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)

    ax = axes[1]
    for gain in GAINS:
        log, _ = logs[gain]
        # ||s|| measures how far the joints run from the adaptive reference;
        # a stiff servo pins it quickly
        ax.semilogy(log.t, np.linalg.norm(log.s, axis=1) + 1e-12,
                    label=f"servo gain {gain:g}")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("||dq - reference|| [rad/s]")
    ax.set_title("velocity tracking")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)

    fig.tight_layout()
    out = HERE / "velocity_servo_study.png"
    fig.savefig(out, dpi=130)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
