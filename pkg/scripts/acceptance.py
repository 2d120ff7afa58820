"""
Desk-scale acceptance run: checks dispersion, nonlinear consistency, the
impulse oracle, eigenvalue convergence and the level structure, and prints
a JSON report with one entry per check.
"""

import json
import math
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import structlog

from app.models import DiskDomain, PhysicalConstants, QuantumNumbers
from app.services.output import OutputWriter
from app.services.runner import cmd_spectrum, load_config
from app.spectral.eigen import convergence_order, eigen_analytic, eigen_grid, grid_solver
from app.spectral.levels import enumerate_levels, gamma_series
from app.vortex.dynamics import evolve_linearized_pde, evolve_nonlinear, linear_deviation
from app.vortex.filament import base_ring, excite_mode, reconstruct_curve, synthesize
from app.vortex.impulse import impulse_f

logger = structlog.get_logger()

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"
J01_SQ = 5.783185962946784


def check_dispersion():
    modes = excite_mode(base_ring(R=1.0, epsilon=0.1), 2, 1.0).modes
    N = 32
    field = synthesize(modes, N)
    period = 2 * math.pi / (2 * math.sqrt(3))
    times = np.linspace(0.0, 3 * period, 61)
    phases = []
    current, last = field, 0.0
    for t in times:
        current = evolve_linearized_pde(current, t - last)
        last = t
        phases.append(np.angle(np.fft.fft(current)[2] / N))
    slope = np.polyfit(times, np.unwrap(phases), 1)[0]
    frequency_error = abs(slope - 2 * math.sqrt(3)) / (2 * math.sqrt(3))

    dipole = synthesize(excite_mode(base_ring(R=1.0, epsilon=0.1), 1, 0.5j).modes, N)
    drift = float(np.abs(evolve_linearized_pde(dipole, 3 * period) - dipole).max())
    return {
        "measured_frequency": float(slope),
        "relative_error": float(frequency_error),
        "dipole_drift": drift,
        "success": frequency_error < 1e-4 and drift < 1e-6,
    }


def check_consistency():
    deviations = {}
    for eps in (1e-2, 5e-3):
        state = excite_mode(base_ring(R=0.25, Gamma=1.0, epsilon=eps), 2, 1.0)
        run = evolve_nonlinear(reconstruct_curve(state, 64), tau=4.0, R0=1.0, reparam_every=0)
        deviations[eps] = linear_deviation(run, state, R0=1.0)
    ratio = deviations[1e-2] / deviations[5e-3]
    return {"deviations": {str(k): v for k, v in deviations.items()}, "ratio": ratio,
            "success": ratio >= 3.0}


def check_impulse():
    base = impulse_f(base_ring(R=1.0), 512)
    axial_error = float(np.abs(base - np.array([0.0, 0.0, math.pi])).max())
    rng = np.random.default_rng(7)
    eps = 1e-3
    worst = 0.0
    for re, im in rng.uniform(-1.0, 1.0, size=(20, 2)):
        j = complex(re, im)
        f = impulse_f(excite_mode(base_ring(R=1.0, Gamma=1.0, epsilon=eps), -1, j))
        worst = max(worst, abs(abs(complex(f[0], f[1])) - 2 * math.pi * eps * abs(j)))
    return {"axial_error": axial_error, "transverse_error": worst,
            "success": axial_error < 1e-8 and worst < 10 * eps**2}


def check_eigenvalues():
    disk = DiskDomain(radius=1.0)
    extrapolated = float(eigen_grid(disk, 1, h=2.0 / 128).lambda_sq[0])
    relative = abs(extrapolated - J01_SQ) / J01_SQ
    values = [grid_solver.solve(disk, 1, h)[0] for h in (1 / 16, 1 / 32, 1 / 64)]
    order = convergence_order(values, exact=J01_SQ)
    return {"lambda1_sq": extrapolated, "relative_error": relative, "order": order,
            "success": relative < 5e-3 and abs(order - 2.0) <= 0.3}


def check_classical_limit():
    c = PhysicalConstants(L=10.0, epsilon=0.0)
    levels = enumerate_levels(c, 0.25, eigen_analytic(DiskDomain(radius=1.0), 20), n_max=16,
                              k_max=5)
    worst = max(abs(lv.level_index - lv.qn.n) for lv in levels)
    return {"levels": len(levels), "max_offset": worst, "success": worst <= 1e-12}


def check_residual_scaling():
    lam = math.sqrt(J01_SQ)
    qn = QuantumNumbers(n=8, m=1, k=0)
    residuals = [
        gamma_series(qn, lam, PhysicalConstants(L=10.0, hbar=1e-6, epsilon=eps), 0.25).residual
        for eps in (0.1, 0.05)
    ]

    def fine(hbar):
        c = PhysicalConstants(L=10.0, hbar=hbar, epsilon=1e-3)
        level = gamma_series(QuantumNumbers(n=8, m=1, k=5), lam, c, 0.25)
        return level.base * c.epsilon**2 * abs(level.fine_structure)

    residual_ratio = residuals[0] / residuals[1]
    hbar_ratio = fine(2e-4) / fine(1e-4)
    return {"residual_ratio": residual_ratio, "fine_structure_ratio": hbar_ratio,
            "success": residual_ratio >= 8.0 and abs(hbar_ratio - 4.0) <= 0.2}


def check_peaks_and_determinism():
    config = load_config(CONFIG_DIR / "disk_spectrum.yaml")
    with tempfile.TemporaryDirectory() as tmp:
        outputs = []
        for run in ("a", "b"):
            writer = OutputWriter(Path(tmp) / run, config_path=CONFIG_DIR / "disk_spectrum.yaml")
            summary = cmd_spectrum(config, writer)
            outputs.append({p.name: p.read_bytes() for p in writer.directory.glob("*.csv")})
    split = all(count > 1 for count in summary["sublevels_per_n"].values())
    return {
        "within_bound": summary["within_bound"],
        "sublevels_split": split,
        "identical_outputs": outputs[0] == outputs[1],
        "success": summary["within_bound"] and split and outputs[0] == outputs[1],
    }


CHECKS = [
    ("dispersion", check_dispersion),
    ("nonlinear_consistency", check_consistency),
    ("impulse", check_impulse),
    ("eigenvalue_convergence", check_eigenvalues),
    ("classical_limit", check_classical_limit),
    ("residual_scaling", check_residual_scaling),
    ("peaks_and_determinism", check_peaks_and_determinism),
]


def run_acceptance() -> int:
    results = []
    for name, check in CHECKS:
        start = time.time()
        try:
            result = check()
        except Exception as e:
            logger.exception("acceptance_check_crashed", check=name)
            result = {"success": False, "error": str(e)}
        result = {"check": name, "latency": time.time() - start, **result}
        results.append(result)
        logger.info("acceptance_check", check=name, success=result["success"],
                    latency=result["latency"])

    report = {
        "checks": results,
        "success_rate": sum(1 for item in results if item["success"]) / len(results),
    }
    print(json.dumps(report, indent=2, default=float))
    return 0 if all(item["success"] for item in results) else 1


if __name__ == "__main__":
    sys.exit(run_acceptance())
