"""Kick a trained network and let it heal.

After the identity map is learned, every hundred steps a tenth of the
devices get 5% more resistance. Some inputs then pick the wrong output,
and the ongoing training repairs them, usually within a few dozen steps.
"""
from memlearn import experiments as ex
from memlearn.network import NetworkDims
from memlearn.trainer import TrainerConfig

trace = ex.run_perturbation(NetworkDims(4, 200, 4), TrainerConfig(), period=100, fraction=0.1,
                            factor=1.05, seed=1, events=10)
print("identity learned at step", trace.learned_at)
for e in trace.events:
    fix = "no error" if e.error_after == 0 else f"error {e.error_after}, fixed after {e.recovery_steps} steps"
    print(f"perturbation at step {e.step}: {fix}")
print(f"recovered fraction: {trace.recovered_fraction:.2f}")
