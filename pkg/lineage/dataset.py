"""
The lineage dataset: a directory of sorted-key JSON files plus the source
tree of every lineage member, and the summary statistics computed from it.
"""

import json
import os
from collections import Counter
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional

from django.conf import settings
from django.utils._os import safe_join
from django.utils.translation import gettext as _

from generic.utils import print_debug
from lineage.exceptions import BundleIntegrityError
from lineage.ingest import upgraded_proxies
from lineage.lineages import build_lineages, contract_pairs
from lineage.pairing import pair_contracts
from lineage.records import (ContractPair, Corpus, Diagnostic, FilePair, FunctionPair, Lineage, LineageDiagnostics)
from lineage.utils import canonical_json, file_digest, write_text

MANIFEST = 'manifest.json'
LINEAGES = 'lineages.json'
CONTRACT_PAIRS = 'contract_pairs.json'
FILE_PAIRS = 'file_pairs.json'
FUNCTION_PAIRS = 'function_pairs.json'
DIAGNOSTICS = 'diagnostics.json'
CONTRACTS = 'contracts.json'
SOURCES = 'sources'

HIGH_SIMILARITY = 0.90


@dataclass
class PipelineResult:
    corpus: Corpus
    lineages: List[Lineage]
    lineage_diagnostics: LineageDiagnostics
    contract_pairs: List[ContractPair]
    file_pairs: List[FilePair]
    function_pairs: List[FunctionPair]
    pairing_diagnostics: List[Diagnostic]


def run_pipeline(corpus: Corpus, *, same_creator=True, upgraded_only=False) -> PipelineResult:
    proxies = upgraded_proxies(corpus) if upgraded_only else None
    lineages, lineage_diagnostics = build_lineages(corpus, same_creator=same_creator, proxies=proxies)
    pairs = contract_pairs(lineages)
    pairing = pair_contracts(corpus, pairs)

    return PipelineResult(
        corpus=corpus,
        lineages=lineages,
        lineage_diagnostics=lineage_diagnostics,
        contract_pairs=pairs,
        file_pairs=pairing.file_pairs,
        function_pairs=pairing.function_pairs,
        pairing_diagnostics=pairing.diagnostics,
    )


@dataclass
class DatasetBundle:
    manifest: dict
    lineages: List[Lineage] = field(default_factory=list)
    contract_pairs: List[ContractPair] = field(default_factory=list)
    file_pairs: List[FilePair] = field(default_factory=list)
    function_pairs: List[FunctionPair] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    contracts: List[dict] = field(default_factory=list)


def generation_timestamp(corpus: Corpus) -> int:
    epoch = os.environ.get('SOURCE_DATE_EPOCH')
    if epoch:
        return int(epoch)
    return max((event.timestamp for event in corpus.events), default=0)


def build_manifest(corpus: Corpus, inputs: Dict[str, str] = None) -> dict:
    generated_at = datetime.fromtimestamp(generation_timestamp(corpus), tz=timezone.utc)
    return {
        'version': settings.DATASET_VERSION,
        'generated_at': generated_at.isoformat(),
        'inputs': {
            name: {
                'file': Path(path).name,
                'sha256': file_digest(path),
            } for name, path in sorted((inputs or {}).items())
        },
    }


def _contract_summary(record):
    return {
        'address': record.address,
        'creator': record.creator,
        'deploy_timestamp': record.deploy_timestamp,
        'verified': record.verified,
        'open_source': record.open_source,
        'files': [{
            'directory': source_file.directory,
            'filename': source_file.filename,
            'lines': source_file.line_count,
        } for source_file in record.files],
    }


def build_bundle(result: PipelineResult, inputs: Dict[str, str] = None) -> DatasetBundle:
    members = sorted({address for lineage in result.lineages for address in lineage.addresses})
    messages = sorted(result.corpus.diagnostics + result.pairing_diagnostics,
                      key=lambda d: (d.code, d.detail))

    return DatasetBundle(
        manifest=build_manifest(result.corpus, inputs),
        lineages=list(result.lineages),
        contract_pairs=list(result.contract_pairs),
        file_pairs=list(result.file_pairs),
        function_pairs=list(result.function_pairs),
        diagnostics={
            'exclusions': [exclusion.to_dict() for exclusion in result.lineage_diagnostics.exclusions],
            'messages': [diagnostic.to_dict() for diagnostic in messages],
        },
        contracts=[_contract_summary(result.corpus.contracts[address]) for address in members],
    )


def check_integrity(bundle: DatasetBundle):
    """
    Every pair must point at lineages, contracts and files present in the bundle.
    """
    contracts = {contract['address']: contract for contract in bundle.contracts}
    files = {(contract['address'], item['directory'], item['filename'])
             for contract in bundle.contracts for item in contract['files']}

    adjacent = set()
    for lineage in bundle.lineages:
        for address in lineage.addresses:
            if address not in contracts:
                raise BundleIntegrityError(_('Lineage {proxy} references unknown contract {address}').format(
                    proxy=lineage.proxy, address=address))
        adjacent.update((lineage.proxy, a, b) for a, b in zip(lineage.addresses, lineage.addresses[1:]))

    pairs = set()
    for pair in bundle.contract_pairs:
        key = (pair.proxy, pair.predecessor, pair.successor)
        if key not in adjacent:
            raise BundleIntegrityError(_('Contract pair {pair} is not adjacent in a lineage').format(pair=key))
        pairs.add(key)

    file_pairs = set()
    for file_pair in bundle.file_pairs:
        key = (file_pair.proxy, file_pair.predecessor, file_pair.successor)
        if key not in pairs:
            raise BundleIntegrityError(_('File pair {identity} has no contract pair').format(
                identity=file_pair.identity))
        if ((file_pair.predecessor, file_pair.directory, file_pair.predecessor_filename) not in files
                or (file_pair.successor, file_pair.directory, file_pair.successor_filename) not in files):
            raise BundleIntegrityError(_('File pair {identity} references unknown files').format(
                identity=file_pair.identity))
        file_pairs.add(key + (file_pair.directory, file_pair.predecessor_filename, file_pair.successor_filename))

    for function_pair in bundle.function_pairs:
        key = (function_pair.proxy, function_pair.predecessor, function_pair.successor, function_pair.directory,
               function_pair.predecessor_filename, function_pair.successor_filename)
        if key not in file_pairs:
            raise BundleIntegrityError(_('Function pair {name} has no file pair').format(
                name=function_pair.predecessor_function.name))


def emit_dataset(result: PipelineResult, out_dir, *, inputs: Dict[str, str] = None) -> DatasetBundle:
    bundle = build_bundle(result, inputs)
    check_integrity(bundle)

    out_dir = str(out_dir)
    documents = {
        MANIFEST: bundle.manifest,
        LINEAGES: [lineage.to_dict() for lineage in bundle.lineages],
        CONTRACT_PAIRS: [pair.to_dict() for pair in bundle.contract_pairs],
        FILE_PAIRS: [pair.to_dict() for pair in bundle.file_pairs],
        FUNCTION_PAIRS: [pair.to_dict() for pair in bundle.function_pairs],
        DIAGNOSTICS: bundle.diagnostics,
        CONTRACTS: bundle.contracts,
    }
    for name, data in documents.items():
        write_text(safe_join(out_dir, name), canonical_json(data))

    for contract in bundle.contracts:
        record = result.corpus.contracts[contract['address']]
        for source_file in record.files:
            # safe_join raises SuspiciousFileOperation for paths leaving out_dir
            write_text(safe_join(out_dir, SOURCES, record.address, source_file.path), source_file.content)

    print_debug(_('Wrote dataset with {lineages} lineages to {out_dir}').format(lineages=len(bundle.lineages),
                                                                               out_dir=out_dir))
    return bundle


def _read_json(out_dir, name):
    with open(safe_join(str(out_dir), name), 'r', encoding='utf-8') as file:
        return json.load(file)


def load_dataset(out_dir) -> DatasetBundle:
    return DatasetBundle(
        manifest=_read_json(out_dir, MANIFEST),
        lineages=[Lineage.from_dict(item) for item in _read_json(out_dir, LINEAGES)],
        contract_pairs=[ContractPair.from_dict(item) for item in _read_json(out_dir, CONTRACT_PAIRS)],
        file_pairs=[FilePair.from_dict(item) for item in _read_json(out_dir, FILE_PAIRS)],
        function_pairs=[FunctionPair.from_dict(item) for item in _read_json(out_dir, FUNCTION_PAIRS)],
        diagnostics=_read_json(out_dir, DIAGNOSTICS),
        contracts=_read_json(out_dir, CONTRACTS),
    )


def _percent(numerator, denominator) -> Optional[float]:
    return 100.0 * numerator / denominator if denominator else None


def _mean(values) -> Optional[float]:
    values = list(values)
    return sum(values) / len(values) if values else None


@dataclass
class StatsReport:
    lineages: int = 0
    distinct_creators: int = 0
    contract_pairs: int = 0
    total_contracts: int = 0
    open_source_percent: Optional[float] = None
    solidity_files: int = 0
    updated_files_percent: Optional[float] = None
    file_pairs: int = 0
    average_gap_days: Optional[float] = None
    files_in_pairs_percent: Optional[float] = None
    average_file_similarity: Optional[float] = None
    average_content_similarity: Optional[float] = None
    high_similarity_percent: Optional[float] = None
    function_pairs: int = 0
    largest_lineage: int = 0
    lineage_sizes: Dict[int, int] = field(default_factory=dict)

    def to_dict(self):
        data = asdict(self)
        data['lineage_sizes'] = {str(size): count for size, count in sorted(self.lineage_sizes.items())}
        return data

    def to_rows(self):
        return [{'metric': name, 'value': value} for name, value in sorted(self.to_dict().items())
                if name != 'lineage_sizes'] + [
            {'metric': 'lineage_size_{}'.format(size), 'value': count}
            for size, count in sorted(self.lineage_sizes.items())
        ]


def files_in_pairs_percent(bundle: DatasetBundle) -> Optional[float]:
    """
    Share of the files of open-source paired contracts that appear in a file pair.
    """
    contracts = {contract['address']: contract for contract in bundle.contracts}
    paired_contracts = set()
    for pair in bundle.contract_pairs:
        predecessor = contracts.get(pair.predecessor)
        successor = contracts.get(pair.successor)
        if predecessor and successor and predecessor['open_source'] and successor['open_source']:
            paired_contracts.update((pair.predecessor, pair.successor))

    files = {(address, item['directory'], item['filename'])
             for address in paired_contracts for item in contracts[address]['files']}

    in_pairs = set()
    for file_pair in bundle.file_pairs:
        in_pairs.add((file_pair.predecessor, file_pair.directory, file_pair.predecessor_filename))
        in_pairs.add((file_pair.successor, file_pair.directory, file_pair.successor_filename))

    return _percent(len(files & in_pairs), len(files))


def compute_stats(bundle: DatasetBundle) -> StatsReport:
    contracts = {contract['address']: contract for contract in bundle.contracts}
    members = {address for lineage in bundle.lineages for address in lineage.addresses}
    sizes = Counter(len(lineage) for lineage in bundle.lineages)
    file_pairs = bundle.file_pairs

    return StatsReport(
        lineages=len(bundle.lineages),
        distinct_creators=len({lineage.creator for lineage in bundle.lineages}),
        contract_pairs=len(bundle.contract_pairs),
        total_contracts=len(members),
        open_source_percent=_percent(sum(contracts[address]['open_source'] for address in members), len(members)),
        solidity_files=sum(len(contracts[address]['files']) for address in members),
        updated_files_percent=_percent(sum(pair.line_similarity < 1.0 for pair in file_pairs), len(file_pairs)),
        file_pairs=len(file_pairs),
        average_gap_days=_mean(pair.gap_days for pair in bundle.contract_pairs),
        files_in_pairs_percent=files_in_pairs_percent(bundle),
        average_file_similarity=_mean(pair.line_similarity for pair in file_pairs),
        average_content_similarity=_mean(pair.content_similarity for pair in file_pairs),
        high_similarity_percent=_percent(sum(pair.line_similarity >= HIGH_SIMILARITY for pair in file_pairs),
                                         len(file_pairs)),
        function_pairs=len(bundle.function_pairs),
        largest_lineage=max(sizes, default=0),
        lineage_sizes=dict(sorted(sizes.items())),
    )


def creator_rule_ablation(corpus: Corpus, *, upgraded_only=False) -> dict:
    """
    Lineage and file pairing figures with and without the same-creator rule.
    """
    report = {}
    for name, same_creator in (('with_creator_rule', True), ('without_creator_rule', False)):
        stats = compute_stats(build_bundle(run_pipeline(corpus, same_creator=same_creator,
                                                        upgraded_only=upgraded_only)))
        report[name] = {
            'lineages': stats.lineages,
            'contract_pairs': stats.contract_pairs,
            'file_pairs': stats.file_pairs,
            'files_in_pairs_percent': stats.files_in_pairs_percent,
        }

    return report
