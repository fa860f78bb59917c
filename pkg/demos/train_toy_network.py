# Train the small multi-task network on procedural data for a few hundred
# steps, then compare it against a run that drops the background-line task.
# Takes about a minute on one CPU core.

import numpy as np

from auxmatting.igdrnet import (TASKS, NetworkConfig, TrainConfig, heldout_line_error, parameter_count,
                                smoothed, synth_sample, train)

cfg = TrainConfig()
print("config:", cfg.to_json().replace("\n", " "))
print("parameters:", parameter_count(NetworkConfig(base_channels=cfg.base_channels)))


def progress(step, report):
    if step % 50 == 0:
        terms = " ".join(f"{k}={v:.3f}" for k, v in report.terms.items())
        print(f"step {step:3d} {report.task:8s} total={report.total:.3f}  {terms}")


result = train(cfg, progress=progress)

for task in TASKS:
    s = smoothed(result.task_curve(task), 20)
    print(f"{task:8s} first window {s[0]:.3f}  last window {s[-1]:.3f}  ratio {s[-1] / s[0]:.2f}")

# how far the learned offsets move the semantic features, in OS8 cells
s = synth_sample("matting", 123)
offsets = result.network.forward(s.image, s.guidance).igdr["offsets"].data
print("mean offset magnitude:", round(float(np.hypot(offsets[0], offsets[1]).mean()), 3))

without = train(TrainConfig(schedule={"matting": 1, "seg": 1, "bgline": 0}))
full_err = heldout_line_error(result.network)
cut_err = heldout_line_error(without.network)
print(f"held-out line error: all tasks {full_err:.4f}, without line task {cut_err:.4f}")
print("line task helps" if full_err < cut_err else "line task did not help on this seed")
