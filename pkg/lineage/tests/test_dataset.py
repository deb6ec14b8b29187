import dataclasses
import hashlib
import json
import os
import tempfile
from unittest import mock

from django.core.exceptions import SuspiciousFileOperation
from django.test import SimpleTestCase

from lineage.dataset import (CONTRACT_PAIRS, MANIFEST, SOURCES, build_bundle, check_integrity, compute_stats,
                             creator_rule_ablation, emit_dataset, load_dataset, run_pipeline)
from lineage.exceptions import BundleIntegrityError
from lineage.ingest import load_corpus
from lineage.tests.utils import address, fixture, make_contract, make_corpus, make_event, sol

DAY = 86400
CREATOR = '0x' + 'd' * 40
PA, PB = address(0xA0), address(0xB0)
A1, A2 = address(0xA1), address(0xA2)
B1, B2, B3 = address(0xB1), address(0xB2), address(0xB3)

TOKEN = '''pragma solidity ^0.8.0;

contract Token {
    mapping(address => uint256) balances;

    function transfer(address to, uint256 amount) public returns (bool) {
        balances[msg.sender] -= amount;
        balances[to] += amount;
        return true;
    }
}
'''


def token_contract(contract_address, directory='contracts'):
    return make_contract(contract_address, CREATOR, [sol('Token.sol', TOKEN, directory)])


def two_lineages():
    events = [
        make_event(PA, A1, 0), make_event(PA, A1, DAY),
        make_event(PA, A2, 2 * DAY), make_event(PA, A2, 3 * DAY),
        make_event(PB, B1, 0), make_event(PB, B1, DAY),
        make_event(PB, B2, 3 * DAY), make_event(PB, B2, 4 * DAY),
        make_event(PB, B3, 7 * DAY),
    ]
    return make_corpus(events, [token_contract(member) for member in (A1, A2, B1, B2, B3)])


def read_tree(root):
    tree = {}
    for directory, _dirs, files in os.walk(root):
        for name in files:
            path = os.path.join(directory, name)
            with open(path, 'rb') as file:
                tree[os.path.relpath(path, root)] = file.read()
    return tree


class EmitDatasetTest(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.out = os.path.join(self.tmp.name, 'dataset')

    def test_two_lineages(self):
        bundle = emit_dataset(run_pipeline(two_lineages()), self.out)

        self.assertEqual([lineage.addresses for lineage in bundle.lineages], [[A1, A2], [B1, B2, B3]])
        self.assertEqual([pair.gap_days for pair in bundle.contract_pairs], [1.0, 2.0, 3.0])
        self.assertEqual(len(bundle.file_pairs), 3)
        self.assertEqual(len(bundle.function_pairs), 3)
        self.assertTrue(os.path.exists(os.path.join(self.out, SOURCES, B3, 'contracts', 'Token.sol')))

    def test_statistics(self):
        report = compute_stats(emit_dataset(run_pipeline(two_lineages()), self.out))

        self.assertEqual(report.lineages, 2)
        self.assertEqual(report.distinct_creators, 1)
        self.assertEqual(report.contract_pairs, 3)
        self.assertEqual(report.total_contracts, 5)
        self.assertEqual(report.open_source_percent, 100.0)
        self.assertEqual(report.solidity_files, 5)
        self.assertEqual(report.average_gap_days, 2.0)
        self.assertEqual(report.lineage_sizes, {2: 1, 3: 1})
        self.assertEqual(report.largest_lineage, 3)
        self.assertEqual(report.average_file_similarity, 1.0)
        self.assertEqual(report.average_content_similarity, 1.0)
        self.assertEqual(report.high_similarity_percent, 100.0)
        self.assertEqual(report.updated_files_percent, 0.0)
        self.assertEqual(report.files_in_pairs_percent, 100.0)
        self.assertEqual(report.function_pairs, 3)
        self.assertEqual(report.to_dict()['lineage_sizes'], {'2': 1, '3': 1})

    def test_emitting_twice_is_byte_identical(self):
        second = os.path.join(self.tmp.name, 'again')
        emit_dataset(run_pipeline(two_lineages()), self.out)
        emit_dataset(run_pipeline(two_lineages()), second)

        self.assertEqual(read_tree(self.out), read_tree(second))

    def test_load_dataset(self):
        bundle = emit_dataset(run_pipeline(two_lineages()), self.out)
        loaded = load_dataset(self.out)

        self.assertEqual(loaded.manifest, bundle.manifest)
        self.assertEqual(loaded.lineages, bundle.lineages)
        self.assertEqual(loaded.contract_pairs, bundle.contract_pairs)
        self.assertEqual(loaded.file_pairs, bundle.file_pairs)
        self.assertEqual(len(loaded.function_pairs), len(bundle.function_pairs))
        self.assertEqual(compute_stats(loaded).to_dict(), compute_stats(bundle).to_dict())

    def test_empty_corpus(self):
        with mock.patch.dict(os.environ, {'SOURCE_DATE_EPOCH': str(DAY)}):
            bundle = emit_dataset(run_pipeline(make_corpus([], [])), self.out)

        self.assertEqual(bundle.lineages, [])
        with open(os.path.join(self.out, MANIFEST), 'r', encoding='utf-8') as file:
            manifest = json.load(file)
        self.assertEqual(manifest['generated_at'], '1970-01-02T00:00:00+00:00')
        self.assertEqual(manifest['inputs'], {})

        report = compute_stats(load_dataset(self.out))
        self.assertEqual(report.lineages, 0)
        self.assertIsNone(report.average_gap_days)
        self.assertEqual(report.lineage_sizes, {})

    def test_timestamp_from_latest_event(self):
        with mock.patch.dict(os.environ):
            os.environ.pop('SOURCE_DATE_EPOCH', None)
            bundle = build_bundle(run_pipeline(two_lineages()))
        self.assertEqual(bundle.manifest['generated_at'], '1970-01-08T00:00:00+00:00')

    def test_input_digests(self):
        traces = fixture('three_callees', 'traces.ndjson')
        contracts = fixture('three_callees', 'contracts.ndjson')
        corpus = load_corpus(traces, contracts)
        bundle = emit_dataset(run_pipeline(corpus), self.out, inputs={'traces': traces, 'contracts': contracts})

        with open(traces, 'rb') as file:
            digest = hashlib.sha256(file.read()).hexdigest()
        self.assertEqual(bundle.manifest['inputs']['traces'], {'file': 'traces.ndjson', 'sha256': digest})

    def test_source_path_outside_the_dataset(self):
        corpus = make_corpus([make_event(PA, A1, 0), make_event(PA, A2, 5)],
                             [token_contract(A1, '../../..'), token_contract(A2, '../../..')])
        with self.assertRaises(SuspiciousFileOperation):
            emit_dataset(run_pipeline(corpus), self.out)

    def test_contract_pairs_file_is_sorted_json(self):
        emit_dataset(run_pipeline(two_lineages()), self.out)
        with open(os.path.join(self.out, CONTRACT_PAIRS), 'r', encoding='utf-8') as file:
            text = file.read()

        self.assertTrue(text.endswith('\n'))
        self.assertEqual(text, json.dumps(json.loads(text), sort_keys=True, indent=2, ensure_ascii=False) + '\n')


class IntegrityTest(SimpleTestCase):
    def setUp(self):
        self.bundle = build_bundle(run_pipeline(two_lineages()))

    def test_valid_bundle(self):
        check_integrity(self.bundle)

    def test_pair_outside_a_lineage(self):
        pair = self.bundle.contract_pairs[0]
        self.bundle.contract_pairs.append(dataclasses.replace(pair, predecessor=pair.successor,
                                                              successor=pair.predecessor))
        with self.assertRaises(BundleIntegrityError):
            check_integrity(self.bundle)

    def test_file_pair_without_contract_pair(self):
        del self.bundle.contract_pairs[0]
        with self.assertRaises(BundleIntegrityError):
            check_integrity(self.bundle)

    def test_unknown_file(self):
        self.bundle.file_pairs[0] = dataclasses.replace(self.bundle.file_pairs[0], successor_filename='Other.sol')
        with self.assertRaises(BundleIntegrityError):
            check_integrity(self.bundle)

    def test_unknown_member(self):
        self.bundle.contracts = [contract for contract in self.bundle.contracts if contract['address'] != B3]
        with self.assertRaises(BundleIntegrityError):
            check_integrity(self.bundle)


class CreatorAblationTest(SimpleTestCase):
    def test_fixture(self):
        corpus = load_corpus(fixture('three_callees', 'traces.ndjson'), fixture('three_callees', 'contracts.ndjson'))
        report = creator_rule_ablation(corpus)

        self.assertEqual(report['with_creator_rule'], {
            'lineages': 1,
            'contract_pairs': 1,
            'file_pairs': 1,
            'files_in_pairs_percent': 100.0,
        })
        self.assertEqual(set(report), {'with_creator_rule', 'without_creator_rule'})
