"""One 4x200x4 network learns seven maps in a row without being reset.

Every switch to a new map makes the error jump, and the network then
relearns. Resistances only ever grow, so later maps must be found among
paths that earlier punishments left open; the budget per map is raised to
5000 steps to give them room.
"""
from memlearn import experiments as ex
from memlearn.network import NetworkDims
from memlearn.trainer import TrainerConfig

labels = list(ex.SEQUENTIAL_SCHEDULE_4)
maps = [ex.SEQUENTIAL_MAPS_4[k] for k in labels]
trace = ex.run_sequential_maps(NetworkDims(4, 200, 4), maps, TrainerConfig(max_training_steps=5000), seed=0, labels=labels)

start = 0
for m, label in enumerate(labels):
    end = trace.learned_at[m]
    if end is None:
        print(f"map {label} ({maps[m].label()}): not learned within the budget")
        break
    errs = trace.errors[start:end]
    print(f"map {label} ({maps[m].label()}): {end - start:4d} steps, first error {errs[0]}")
    start = end
