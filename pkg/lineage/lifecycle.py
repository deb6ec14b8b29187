import json
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Optional

from django.conf import settings
from django.core.exceptions import ImproperlyConfigured, ValidationError
from django.utils.translation import gettext as _

from lineage.exceptions import ParseError
from lineage.forms import FindingForm, form_errors_as_text
from lineage.records import (CombineMode, ContractPair, Corpus, Diagnostic, FilePair, Finding, FindingKey,
                             LifecycleRecord, LifecycleStatus)
from lineage.utils import read_ndjson

SECONDS_PER_DAY = 86400

UNKNOWN_CONTRACT = 'UNKNOWN_CONTRACT'
UNKNOWN_FILE = 'UNKNOWN_FILE'
LINES_OUT_OF_RANGE = 'LINES_OUT_OF_RANGE'


def load_findings(report_path, corpus: Corpus = None, diagnostics: List[Diagnostic] = None) -> List[Finding]:
    """
    Findings from an NDJSON report. References to unknown contracts, files or
    lines are kept and reported in `diagnostics`.
    """
    findings = []
    for lineno, data in read_ndjson(report_path):
        form = FindingForm(data=data)
        if not form.is_valid():
            raise ParseError(form_errors_as_text(form), path=report_path, lineno=lineno)

        finding = Finding(**form.cleaned_data)
        findings.append(finding)

        if corpus is None or diagnostics is None:
            continue

        location = '{path}:{lineno}'.format(path=report_path, lineno=lineno)
        record = corpus.contracts.get(finding.contract)
        if record is None:
            diagnostics.append(Diagnostic(UNKNOWN_CONTRACT, '{location}: {address}'.format(
                location=location, address=finding.contract)))
            continue

        source_file = record.get_file(finding.directory, finding.filename)
        if source_file is None:
            if record.open_source:
                diagnostics.append(Diagnostic(UNKNOWN_FILE, '{location}: {path}'.format(location=location,
                                                                                       path=finding.path)))
        elif finding.end_line > source_file.line_count:
            diagnostics.append(Diagnostic(LINES_OUT_OF_RANGE, '{location}: {path} has {count} lines'.format(
                location=location, path=finding.path, count=source_file.line_count)))

    return findings


def load_category_map(path) -> Dict[str, Dict[str, str]]:
    with open(path, 'r', encoding='utf-8') as file:
        try:
            data = json.load(file)
        except ValueError as e:
            raise ValidationError(_('Invalid category map {path}: {error}').format(path=path, error=e),
                                  code='invalid') from None

    valid = isinstance(data, dict) and all(
        isinstance(types, dict) and all(isinstance(value, str) for value in types.values())
        for types in data.values()
    )
    if not valid:
        raise ValidationError(_('Category map {path} must map tool -> {{vuln_type -> category}}').format(path=path),
                              code='invalid')

    return data


def _file_keys(file_pairs: Iterable[FilePair], pair: ContractPair):
    predecessor_keys = {}
    successor_keys = {}
    for file_pair in file_pairs:
        if file_pair.predecessor == pair.predecessor and file_pair.successor == pair.successor:
            predecessor_keys[file_pair.predecessor_path] = file_pair.identity
            successor_keys[file_pair.successor_path] = file_pair.identity
    return predecessor_keys, successor_keys


def diff_pair(pair: ContractPair, file_pairs: Iterable[FilePair], pred_findings: Iterable[Finding],
              succ_findings: Iterable[Finding]) -> List[LifecycleRecord]:
    """
    Match findings of two adjacent versions on (tool, vuln_type, file).

    Line numbers are ignored. Equal keys match one for one, surplus predecessor
    findings disappeared and surplus successor findings were introduced.
    """
    predecessor_keys, successor_keys = _file_keys(file_pairs, pair)

    before = Counter(FindingKey(f.tool, f.vuln_type, predecessor_keys.get(f.path, f.path))
                     for f in pred_findings if f.contract == pair.predecessor)
    after = Counter(FindingKey(f.tool, f.vuln_type, successor_keys.get(f.path, f.path))
                    for f in succ_findings if f.contract == pair.successor)

    days = (pair.successor_window.first_call - pair.predecessor_window.first_call) / SECONDS_PER_DAY

    def record(key, status):
        return LifecycleRecord(
            proxy=pair.proxy,
            key=key,
            status=status,
            predecessor=pair.predecessor,
            successor=pair.successor,
            days_to_disappear=days if status == LifecycleStatus.DISAPPEARED else None,
        )

    records = []
    for key in sorted(before.keys() | after.keys()):
        predecessor_count, successor_count = before[key], after[key]
        records.extend(record(key, LifecycleStatus.PERSISTED) for _i in range(min(predecessor_count,
                                                                                 successor_count)))
        records.extend(record(key, LifecycleStatus.INTRODUCED) for _i in range(successor_count -
                                                                              predecessor_count))
        records.extend(record(key, LifecycleStatus.DISAPPEARED) for _i in range(predecessor_count -
                                                                               successor_count))

    return records


def diff_lineage(pairs: Iterable[ContractPair], file_pairs: Iterable[FilePair],
                 findings: Iterable[Finding]) -> List[LifecycleRecord]:
    """
    diff_pair over consecutive pairs, findings looked up by contract.
    """
    by_contract = defaultdict(list)
    for finding in findings:
        by_contract[finding.contract].append(finding)

    file_pairs = list(file_pairs)
    records = []
    for pair in pairs:
        records.extend(diff_pair(pair, file_pairs, by_contract[pair.predecessor], by_contract[pair.successor]))

    return records


def _category_of(category_map, tool, vuln_type):
    return category_map.get(tool, {}).get(vuln_type)


def _check_mapped(category_map, tool_types):
    unmapped = sorted(pair for pair in set(tool_types) if _category_of(category_map, *pair) is None)
    if unmapped:
        raise ImproperlyConfigured(_('No category for {types}').format(
            types=', '.join('{}:{}'.format(tool, vuln_type) for tool, vuln_type in unmapped)))


def intersect_records(records: List[LifecycleRecord], tools, category_map) -> List[LifecycleRecord]:
    """
    Records whose logical warning (category, file) every tool reports on the same pair.
    """
    _check_mapped(category_map, ((r.key.tool, r.key.vuln_type) for r in records))

    reporters = defaultdict(set)
    for r in records:
        logical = (r.predecessor, r.successor, _category_of(category_map, r.key.tool, r.key.vuln_type), r.key.file)
        reporters[logical].add(r.key.tool)

    return [r for r in records
            if reporters[(r.predecessor, r.successor, _category_of(category_map, r.key.tool, r.key.vuln_type),
                          r.key.file)] >= set(tools)]


def intersect_findings(findings: List[Finding], tools, category_map) -> List[Finding]:
    _check_mapped(category_map, ((f.tool, f.vuln_type) for f in findings))

    reporters = defaultdict(set)
    for f in findings:
        reporters[(f.contract, _category_of(category_map, f.tool, f.vuln_type), f.path)].add(f.tool)

    return [f for f in findings
            if reporters[(f.contract, _category_of(category_map, f.tool, f.vuln_type), f.path)] >= set(tools)]


def count_vulnerable_lines(findings: Iterable[Finding], corpus: Corpus = None) -> int:
    """
    Distinct source lines covered by findings, per contract file.

    Overlapping ranges are merged rather than enumerated. Files the corpus
    knows cap their ranges at their line count.
    """
    spans = defaultdict(list)
    for f in findings:
        end_line = f.end_line
        record = corpus.contracts.get(f.contract) if corpus is not None else None
        source_file = record.get_file(f.directory, f.filename) if record is not None else None
        if source_file is not None:
            end_line = min(end_line, source_file.line_count)
        if end_line >= f.start_line:
            spans[(f.contract, f.path)].append((f.start_line, end_line))

    total = 0
    for ranges in spans.values():
        covered = 0
        for start_line, end_line in sorted(ranges):
            start_line = max(start_line, covered + 1)
            if end_line >= start_line:
                total += end_line - start_line + 1
                covered = end_line

    return total


def _percent(numerator, denominator) -> Optional[float]:
    return 100.0 * numerator / denominator if denominator else None


def _mean(values) -> Optional[float]:
    values = list(values)
    return sum(values) / len(values) if values else None


@dataclass
class LifecycleSummary:
    mode: str
    tools: List[str]
    findings: int = 0
    keys: int = 0
    vulnerable_files: int = 0
    vulnerable_contracts: int = 0
    vulnerable_lines: Optional[int] = None
    lineages: int = 0
    introduced: int = 0
    disappeared: int = 0
    persisted: int = 0
    introduced_percent: Dict[str, Optional[float]] = field(default_factory=dict)
    disappeared_percent: Dict[str, Optional[float]] = field(default_factory=dict)
    mean_days_to_disappear: Optional[float] = None
    patched_files: int = 0
    patched_versions: int = 0
    patched_lineages: int = 0
    mean_days_patched: Optional[float] = None
    updated_file_pairs: Optional[int] = None
    updated_patched_percent: Optional[float] = None

    def to_dict(self):
        return asdict(self)


def lifecycle_stats(records: Iterable[LifecycleRecord], mode=CombineMode.UNION, *, tools: Iterable[str] = None,
                    category_map: Dict[str, Dict[str, str]] = None, file_pairs: Iterable[FilePair] = None,
                    findings: Iterable[Finding] = None, corpus: Corpus = None) -> LifecycleSummary:
    """
    Summary counts over lifecycle records, combining tools by union or intersection.

    A file of a pair is patched when, over the records of all selected tools,
    at least one warning disappeared from it and none was introduced.
    Intersection mode keeps the patched files that still have records.
    Percentages are reported over records, keys and files. With `corpus`,
    vulnerable line ranges are clamped to the length of known files.
    """
    records = list(records)
    findings = None if findings is None else list(findings)
    if tools is None:
        tools = {r.key.tool for r in records} | {f.tool for f in findings or []}
    tools = sorted(set(tools))

    records = [r for r in records if r.key.tool in tools]
    if findings is not None:
        findings = [f for f in findings if f.tool in tools]
    union_records = records

    if mode == CombineMode.INTERSECTION:
        if category_map is None:
            category_map = settings.CATEGORY_MAP
        records = intersect_records(records, tools, category_map)
        if findings is not None:
            findings = intersect_findings(findings, tools, category_map)

    summary = LifecycleSummary(mode=str(mode), tools=tools)

    statuses = Counter(r.status for r in records)
    summary.findings = len(records)
    summary.introduced = statuses[LifecycleStatus.INTRODUCED]
    summary.disappeared = statuses[LifecycleStatus.DISAPPEARED]
    summary.persisted = statuses[LifecycleStatus.PERSISTED]

    key_statuses = defaultdict(set)
    file_statuses = defaultdict(set)
    contracts = set()
    for r in records:
        key_statuses[(r.predecessor, r.successor, r.key)].add(r.status)
        file_statuses[(r.proxy, r.predecessor, r.successor, r.key.file)].add(r.status)
        if r.status != LifecycleStatus.INTRODUCED:
            contracts.add(r.predecessor)
        if r.status != LifecycleStatus.DISAPPEARED:
            contracts.add(r.successor)

    summary.keys = len(key_statuses)
    summary.vulnerable_files = len(file_statuses)
    summary.vulnerable_contracts = len(contracts)
    summary.lineages = len({r.proxy for r in records})

    for status, target in ((LifecycleStatus.INTRODUCED, summary.introduced_percent),
                           (LifecycleStatus.DISAPPEARED, summary.disappeared_percent)):
        target['records'] = _percent(statuses[status], len(records))
        target['keys'] = _percent(sum(status in found for found in key_statuses.values()), len(key_statuses))
        target['files'] = _percent(sum(status in found for found in file_statuses.values()), len(file_statuses))

    summary.mean_days_to_disappear = _mean(r.days_to_disappear for r in records
                                           if r.status == LifecycleStatus.DISAPPEARED)

    union_file_statuses = defaultdict(set)
    for r in union_records:
        union_file_statuses[(r.proxy, r.predecessor, r.successor, r.key.file)].add(r.status)
    patched = {file_key for file_key, found in union_file_statuses.items()
               if file_key in file_statuses
               and LifecycleStatus.DISAPPEARED in found and LifecycleStatus.INTRODUCED not in found}
    summary.patched_files = len(patched)
    summary.patched_versions = len({predecessor for _proxy, predecessor, _successor, _file in patched})
    summary.patched_lineages = len({proxy for proxy, _predecessor, _successor, _file in patched})
    summary.mean_days_patched = _mean(r.days_to_disappear for r in records
                                      if r.status == LifecycleStatus.DISAPPEARED
                                      and (r.proxy, r.predecessor, r.successor, r.key.file) in patched)

    if file_pairs is not None:
        updated = [fp for fp in file_pairs if fp.line_similarity < 1.0]
        summary.updated_file_pairs = len(updated)
        summary.updated_patched_percent = _percent(
            sum((fp.proxy, fp.predecessor, fp.successor, fp.identity) in patched for fp in updated), len(updated))

    if findings is not None:
        summary.vulnerable_lines = count_vulnerable_lines(findings, corpus)

    return summary
