"""The end-to-end experiments: a noisy flat through the full pipeline,
and the rank dichotomy by net counting.

The pipeline differentiates a box map, keeps an efficient sub-box,
decides per component whether the image pins a curve or walks a path,
rebuilds candidate flats from the samples, and fits.  The rank
experiment shows a product embedding passing while every map from one
dimension higher is refuted by counting separated image points.
"""

from coarsegeo.constants import default_constants
from coarsegeo.harness import (ExperimentConfig, noisy_flat_map,
                               rank_experiment, run_pipeline, twist_flat)
from coarsegeo.surfmodel import ModelSurface, surface_stats

cn = default_constants()
surface = ModelSurface(((1, 1), (1, 1)), flavor="marking")
augmented = ModelSurface(((1, 1),), flavor="augmented")

print("=== the pipeline on a noisy flat ===")
cfg = ExperimentConfig(surface, eps0=0.05, theta0=0.1, r0=50.0, seed=3,
                       noise=3)
stride = round(1.0 / cfg.eps0 ** 2)
flat = twist_flat(surface, span=int(2 * cfg.r0 * stride))
fmap = noisy_flat_map(flat, cfg.noise, cfg.seed)
report = run_pipeline(cfg, fmap, dim=2, constants=cn, flat_hint=flat)
for stage in report.stages:
    name = stage["stage"]
    if name == "differentiate":
        print(f"scale {stage['scale']} at level {stage['level']}, "
              f"{stage['fraction']:.0%} of tiles efficient")
    elif name == "subbox":
        print(f"sub-box of size {stage['size']}")
    elif name == "branches":
        for b in stage["per_component"]:
            print(f"component {b['component']}: {b['branch']}")
    elif name == "flat_fit":
        print(f"fit {stage['fit']} within cap {stage['cap']:.0f}")
print("pipeline verdict:", "pass" if report.passed else "fail")

print()
print("=== rank by counting ===")
xi, rank = surface_stats(surface)
print(f"two components, marking flavor: rank {rank}")
refute = rank_experiment(ExperimentConfig(surface, eps0=0.05, seed=1,
                                          box_side=60), rank + 1,
                         constants=cn)
for stage in refute.stages:
    if stage["stage"] == "net-separation":
        for m in stage["maps"]:
            print(f"  {m['map']:14s} packed {m['packed']:4d} of {m['net']}: "
                  f"{'refuted' if m['refuted'] else 'NOT refuted'}")
print("all collapse maps refuted:", refute.passed)

print()
print("=== the augmented half-space ===")
half = rank_experiment(ExperimentConfig(augmented, eps0=0.05, theta0=0.1,
                                        r0=50.0, seed=1), 1, constants=cn)
for stage in half.stages:
    if stage["stage"] == "orthant-ray-check":
        print(f"horoball ray band [{stage['low']:.2f}, {stage['high']:.2f}]: "
              f"{'pass' if stage['passed'] else 'fail'}")
print("half-space verdict:", "pass" if half.passed else "fail")
