"""
Running the task pipelines
==========================

Each task builds a fixed prompt, sends it to a model and parses the reply.
Mock models make the whole loop runnable offline.
"""

from plpbench import datasets, models, pipelines
from plpbench.datasets import data_file
from plpbench.datasets import Schema
from plpbench.pipelines import PipelineSpec

loops = datasets.load(data_file("toy_parallelism.jsonl"), Schema.ParallelismLabel)
print(pipelines.build_prompt("parallelism", loops.records[0]))

# mock:echo returns the prompt, so the parser sees the template text itself.
# mock:const:<text> always answers <text>.
for name in ("mock:const:Yes, the iterations are independent.", "mock:const:no", "mock:const:unsure"):
    spec = PipelineSpec("parallelism", models.from_pretrained(name))
    verdict = pipelines.run(spec, loops.records[1])
    print(f"{name:45} -> label {verdict.label} ({verdict.parse_status.value})")

# Batches keep input order. A failing record becomes a BatchFailure and the rest still run.
spec = PipelineSpec("parallelism", models.from_pretrained("mock:choice:yes|no"), models.SamplingConfig(seed=42))
print([getattr(v, "label", v) for v in pipelines.run_batch(spec, loops, parallelism=4)])

# Models that reject temperature 0 get 1e-6 instead.
handle = models.ModelHandle("strict", models.ModelKind.RemoteChat, endpoint="http://localhost:8000",
                            requires_positive_temperature=True)
print(models.build_payload(handle, models.ModelRequest("hi")))
