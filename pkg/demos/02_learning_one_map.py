"""Train one 3x400x3 network on a random map and watch the error fall.

Each training step picks an input, reads which output carries the most
current and, while that answer is wrong, punishes the path with a negative
write pulse. Nothing is ever rewarded.
"""
import numpy as np

from memlearn import device
from memlearn.network import NetworkDims, build_network, resistance_stats
from memlearn.trainer import TrainerConfig, random_map, train_until_learned

rng = np.random.default_rng(3)
net = build_network(NetworkDims(3, 400, 3), device.BMS, rng)
target = random_map(3, 3, rng)
print("target map:", target.label())

before = resistance_stats(net, 5.0)
rec = train_until_learned(net, target, TrainerConfig(), rng)
after = resistance_stats(net, 5.0)

print("learned at step", rec.learned_at)
print("error over the first 20 steps:", rec.errors[:20].tolist())
print("corrections in the first 20 steps:", [s.corrections for s in rec.steps[:20]])
print(f"mean R {before.mean:.1f} -> {after.mean:.1f}, CV {before.cv:.3f} -> {after.cv:.3f}")
print(f"{rec.diagnostics.device_updates} device updates, "
      f"{rec.diagnostics.resistance_decreases} of them lowered a resistance")
