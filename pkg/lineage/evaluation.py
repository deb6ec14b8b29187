"""
Similarity-based lineage construction scored against rule-based lineages.

For every contract of a ground-truth lineage, the contracts similar to it and
created by the same creator form its predicted lineage. Predictions are
compared with the other members of its real lineage, per contract scope and
per similarity threshold.
"""

from typing import Dict, Iterable, List, Optional, Set

from django.utils.translation import gettext as _

from generic.utils import print_debug
from lineage.exceptions import UnknownContract
from lineage.fingerprints import LSHIndex
from lineage.records import Category, ContractScope, Corpus, Diagnostic, Lineage, ScenarioResult

DEFAULT_THRESHOLDS = (Category.LOW, Category.MEDIUM, Category.HIGH)
DEFAULT_SCOPES = (ContractScope.OPEN_SOURCE_ONLY, ContractScope.ALL)

NO_GROUND_TRUTH = 'NO_GROUND_TRUTH'

TABLE_COLUMNS = ('contract type', 'threshold', 'precision %', 'recall %')


def predicted_lineage(index: LSHIndex, corpus: Corpus, query: str, threshold: Category,
                      scope: ContractScope) -> Set[str]:
    record = corpus.contracts.get(query)
    if record is None:
        raise UnknownContract(_('Unknown contract {address}').format(address=query))

    # Contracts without source have no fingerprint and find nothing
    if query not in index:
        return set()

    predicted = set()
    for address, _verdict in index.query(query, threshold):
        candidate = corpus.contracts.get(address)
        if candidate is None or candidate.creator != record.creator:
            continue
        if scope == ContractScope.OPEN_SOURCE_ONLY and not candidate.open_source:
            continue
        predicted.add(address)

    return predicted


def ground_truth_members(lineages: Iterable[Lineage]) -> Dict[str, Set[str]]:
    """
    Every lineage member mapped to the union of the lineages it belongs to.
    """
    members = {}
    for lineage in lineages:
        for address in lineage.addresses:
            members.setdefault(address, set()).update(lineage.addresses)
    return members


def _ratio(numerator, denominator) -> Optional[float]:
    return numerator / denominator if denominator else None


def _mean(values) -> Optional[float]:
    values = [value for value in values if value is not None]
    return sum(values) / len(values) if values else None


def evaluate(ground_truth: Iterable[Lineage], corpus: Corpus, index: LSHIndex,
             thresholds: Iterable[Category] = DEFAULT_THRESHOLDS,
             scopes: Iterable[ContractScope] = DEFAULT_SCOPES, *, average='micro',
             diagnostics: List[Diagnostic] = None) -> List[ScenarioResult]:
    """
    Precision and recall of similarity-predicted lineages, one result per (scope, threshold).

    Counts are pooled over queries. With average='macro' precision and recall
    are the mean of the per-query values that are defined, the counts stay pooled.
    """
    if average not in ('micro', 'macro'):
        raise ValueError(_('Unknown average {average}').format(average=average))

    members = ground_truth_members(ground_truth)
    results = []
    for scope in scopes:
        def in_scope(address):
            if scope == ContractScope.ALL:
                return True
            record = corpus.contracts.get(address)
            return bool(record and record.open_source)

        queries = []
        for query in sorted(members):
            if not in_scope(query):
                continue
            truth = {address for address in members[query] if address != query and in_scope(address)}
            if not truth:
                if diagnostics is not None:
                    diagnostics.append(Diagnostic(NO_GROUND_TRUTH, '{scope}: {address}'.format(scope=scope,
                                                                                           address=query)))
                continue
            queries.append((query, truth))

        for threshold in thresholds:
            tp = fp = fn = 0
            precisions = []
            recalls = []
            for query, truth in queries:
                predicted = predicted_lineage(index, corpus, query, threshold, scope)
                query_tp = len(predicted & truth)
                query_fp = len(predicted - truth)
                query_fn = len(truth - predicted)
                tp += query_tp
                fp += query_fp
                fn += query_fn
                precisions.append(_ratio(query_tp, query_tp + query_fp))
                recalls.append(_ratio(query_tp, query_tp + query_fn))

            if average == 'macro':
                precision, recall = _mean(precisions), _mean(recalls)
            else:
                precision, recall = _ratio(tp, tp + fp), _ratio(tp, tp + fn)

            results.append(ScenarioResult(contract_scope=scope, threshold=threshold, precision=precision,
                                          recall=recall, tp=tp, fp=fp, fn=fn))
            print_debug(_('{scope} at {threshold}: tp={tp} fp={fp} fn={fn}').format(
                scope=scope, threshold=threshold.label, tp=tp, fp=fp, fn=fn))

    return results


def _percent(value):
    return None if value is None else round(value * 100, 2)


def scenario_table(results: Iterable[ScenarioResult]) -> List[dict]:
    return [{
        'contract type': str(ContractScope(result.contract_scope).label),
        'threshold': str(Category(result.threshold).label),
        'precision %': _percent(result.precision),
        'recall %': _percent(result.recall),
    } for result in results]

