import numpy as np

from grounding.exceptions import OutOfRange
from grounding.metrics import evaluate
from grounding.outputs import Schema, Task
from grounding.serializers import PredictionSerializer

from .environment import action_payload, bin_interval, render, schema_template
from .policy import action_probs

DEFAULT_TOP_K = 5


def ranked_actions(policy, observation, top_k=DEFAULT_TOP_K):
    """Interval actions by descending probability; ties keep action order."""
    probs = action_probs(policy, observation)
    order = np.argsort(-probs, kind="stable")[:top_k]
    return [(int(a), float(probs[a])) for a in order]


def clip_coverage(policy, observation) -> np.ndarray:
    """Probability that each clip falls inside the sampled interval."""
    probs = action_probs(policy, observation)
    coverage = np.zeros(policy.num_bins)
    for action, p in enumerate(probs):
        start_bin, end_bin = policy.bins_of(action)
        coverage[start_bin:end_bin + 1] += p
    return coverage


def predict(policy, dataset, schema=Schema.ANSWER_ONLY, top_k=DEFAULT_TOP_K) -> list:
    """
    One prediction row per instance, in the predictions JSON-lines schema.
    ``raw_text`` renders the rank-1 answer under ``schema``.
    """
    if top_k < 1:
        raise OutOfRange("top_k must be at least 1, got %(k)s.", params={"k": top_k})
    template = schema_template(schema)
    rows = []
    for instance in dataset:
        ranked = ranked_actions(policy, instance.observation, top_k)
        bins = [policy.bins_of(action) for action, _ in ranked]
        row = {
            "instance_id": instance.instance_id,
            "ranked_intervals": [
                bin_interval(i, j, instance.duration, instance.num_bins).as_list()
                for i, j in bins
            ],
            "confidences": [p for _, p in ranked],
            "raw_text": render(action_payload(instance, *bins[0]), template),
        }
        if instance.task is Task.HIGHLIGHT:
            coverage = clip_coverage(policy, instance.observation)
            order = np.argsort(-coverage, kind="stable")
            row["ranked_clips"] = [[int(k), float(coverage[k])] for k in order]
        rows.append(row)
    return rows


def evaluate_policy(policy, dataset, top_k=DEFAULT_TOP_K) -> dict:
    """Decodes ``dataset`` with ``policy`` and scores it against the dataset's own ground truth."""
    if not dataset:
        raise OutOfRange("Evaluation needs at least one instance.")
    predictions = []
    for row in predict(policy, dataset, top_k=top_k):
        serializer = PredictionSerializer(data=row)
        serializer.is_valid(raise_exception=True)
        predictions.append(serializer)
    return evaluate(
        dataset[0].task,
        [p.grounding() for p in predictions],
        [p.highlight() for p in predictions],
        {instance.instance_id: instance.target for instance in dataset},
    )
