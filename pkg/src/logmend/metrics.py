"""
Log-parsing accuracy metrics.

- GA:  share of lines whose predicted group equals their ground-truth group.
- PA:  share of lines whose predicted template string equals the truth.
- FGA: F1 over groups, a predicted group counting when it is exactly a truth group.
- FTA: like FGA, but the group's template string must also equal the truth.

Groups are formed by the (whitespace-normalized) template string on both
sides. A predicted group P and a truth group T coincide exactly when the
number of lines they share equals both |P| and |T|.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import pandas as pd

logger = logging.getLogger(__name__)

METRIC_NAMES = ('GA', 'PA', 'FGA', 'FTA')


class MetricsError(ValueError):
    """The inputs cannot be evaluated (empty, misaligned or malformed)."""


def normalize_template(text: str) -> str:
    return ' '.join(str(text).split())


@dataclass
class LabeledCorpus:
    """Aligned predictions and ground truth, one row per LineId."""
    frame: pd.DataFrame

    def __len__(self) -> int:
        return len(self.frame)

    @classmethod
    def from_maps(cls, predicted: Mapping[int, str], truth: Mapping[int, str]) -> 'LabeledCorpus':
        _check_domains(set(predicted), set(truth))
        line_ids = sorted(truth)
        frame = pd.DataFrame({
            'LineId': line_ids,
            'Predicted': [normalize_template(predicted[i]) for i in line_ids],
            'Truth': [normalize_template(truth[i]) for i in line_ids],
        })
        return cls(frame)

    @classmethod
    def from_frames(cls, predicted: pd.DataFrame, truth: pd.DataFrame) -> 'LabeledCorpus':
        pred_map = _template_map(predicted, 'predictions')
        truth_map = _template_map(truth, 'ground truth')
        return cls.from_maps(pred_map, truth_map)

    @classmethod
    def from_csv(cls, predictions_path: Path, truth_path: Path) -> 'LabeledCorpus':
        return cls.from_frames(read_structured_csv(predictions_path), read_structured_csv(truth_path))


def read_structured_csv(path: Path) -> pd.DataFrame:
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False)
    except FileNotFoundError as e:
        raise MetricsError(f"File not found: {path}") from e
    except pd.errors.EmptyDataError as e:
        raise MetricsError(f"{path} is empty") from e


def _template_map(frame: pd.DataFrame, label: str) -> dict:
    missing = [c for c in ('LineId', 'EventTemplate') if c not in frame.columns]
    if missing:
        raise MetricsError(f"The {label} table lacks column(s): {', '.join(missing)}")
    result = {}
    for raw_id, template in zip(frame['LineId'], frame['EventTemplate']):
        try:
            line_id = int(raw_id)
        except (TypeError, ValueError):
            raise MetricsError(f"Invalid LineId {raw_id!r} in the {label} table") from None
        if line_id in result:
            raise MetricsError(f"Duplicate LineId {line_id} in the {label} table")
        result[line_id] = template
    return result


def _check_domains(predicted: set, truth: set) -> None:
    if not truth and not predicted:
        raise MetricsError("Cannot evaluate an empty corpus")
    only_pred = predicted - truth
    only_truth = truth - predicted
    if only_pred or only_truth:
        first = min(only_pred | only_truth)
        where = "predictions" if first in only_pred else "ground truth"
        raise MetricsError(f"LineId {first} appears only in the {where}")


def _group_pairs(corpus: LabeledCorpus) -> pd.DataFrame:
    frame = corpus.frame
    if frame.empty:
        raise MetricsError("Cannot evaluate an empty corpus")
    pairs = frame.groupby(['Predicted', 'Truth']).size().reset_index(name='Count')
    pairs['PredictedSize'] = pairs['Predicted'].map(frame['Predicted'].value_counts())
    pairs['TruthSize'] = pairs['Truth'].map(frame['Truth'].value_counts())
    pairs['Correct'] = (pairs['Count'] == pairs['PredictedSize']) & (pairs['Count'] == pairs['TruthSize'])
    return pairs


def _f1(correct: int, predicted: int, truth: int) -> float:
    if correct == 0:
        return 0.0
    precision = correct / predicted
    recall = correct / truth
    return 2 * precision * recall / (precision + recall)


def ga(corpus: LabeledCorpus) -> float:
    pairs = _group_pairs(corpus)
    return int(pairs.loc[pairs['Correct'], 'Count'].sum()) / len(corpus)


def pa(corpus: LabeledCorpus) -> float:
    frame = corpus.frame
    if frame.empty:
        raise MetricsError("Cannot evaluate an empty corpus")
    return int((frame['Predicted'] == frame['Truth']).sum()) / len(frame)


def fga(corpus: LabeledCorpus) -> float:
    pairs = _group_pairs(corpus)
    correct = int(pairs['Correct'].sum())
    return _f1(correct, corpus.frame['Predicted'].nunique(), corpus.frame['Truth'].nunique())


def fta(corpus: LabeledCorpus) -> float:
    pairs = _group_pairs(corpus)
    correct = int((pairs['Correct'] & (pairs['Predicted'] == pairs['Truth'])).sum())
    return _f1(correct, corpus.frame['Predicted'].nunique(), corpus.frame['Truth'].nunique())


def evaluate(corpus: LabeledCorpus) -> dict:
    result = {'GA': ga(corpus), 'PA': pa(corpus), 'FGA': fga(corpus), 'FTA': fta(corpus)}
    logger.info(
        f"Evaluated {len(corpus)} lines: "
        + ', '.join(f"{name}={result[name]:.4f}" for name in METRIC_NAMES)
    )
    return result
