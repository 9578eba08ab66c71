"""The extremal-dynamics toy model that the memristor network imitates.

Activity follows the strongest weight out of the input and then the
strongest weight out of the middle node. Wrong answers depress both
weights on that path. Larger middle layers learn faster.
"""
import numpy as np

from memlearn import experiments as ex, toy

rng = np.random.default_rng(7)
maps = list(ex.TOY_MAPS_6.values())
trace = toy.toy_train(toy.build_toy(6, 300, 6, rng), maps, 1_000_000, rng)
print("six maps learned at steps", trace.learned_at)

for n_mid in (50, 150, 300):
    times = [toy.first_map_learning_time(6, n_mid, 6, maps[0], seed=s) for s in range(40)]
    print(f"N_mid={n_mid:3d}: median steps to learn the first map = {np.median(times):.0f}")
