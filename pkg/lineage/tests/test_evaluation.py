import random

from django.test import SimpleTestCase

from lineage.evaluation import NO_GROUND_TRUTH, evaluate, ground_truth_members, predicted_lineage, scenario_table
from lineage.exceptions import UnknownContract
from lineage.fingerprints import LSHIndex
from lineage.records import ActivityWindow, Category, ContractScope, Fingerprint, Lineage, LineageVersion
from lineage.tests.utils import address, count_decisions, make_contract, make_corpus, prefix_signature, sol

C, S1, S2, X = (address(number) for number in (0xC0, 0x51, 0x52, 0xEE))
CREATOR = address(0xCC)
THRESHOLDS = {Category.LOW: 0.50, Category.MEDIUM: 0.70, Category.HIGH: 0.90}


def lineage(proxy, creator, *addresses):
    return Lineage(proxy=proxy, creator=creator, versions=tuple(
        LineageVersion(member, ActivityWindow(2 * position, 2 * position + 1))
        for position, member in enumerate(addresses)))


def contract(contract_address, creator=CREATOR, open_source=True):
    files = [sol('Token.sol', 'contract Token {}\n')] if open_source else []
    return make_contract(contract_address, creator, files)


def fingerprint(contract_address, family, member, shared):
    return Fingerprint(contract_address, 256, 0, prefix_signature(family, member, shared), shingle_count=10)


class PredictionTest(SimpleTestCase):
    """
    C, S1 and S2 form one lineage. X has the same creator but another history.
    """

    def setUp(self):
        self.corpus = make_corpus([], [contract(C), contract(S1), contract(S2), contract(X)])
        self.index = LSHIndex([
            fingerprint(C, 1, 1, 256),
            fingerprint(S1, 1, 2, 256),
            fingerprint(X, 1, 3, 240),
            fingerprint(S2, 1, 4, 140),
        ])
        self.lineages = [lineage(address(0x1), CREATOR, C, S1, S2)]

    def test_predicted_lineage(self):
        self.assertEqual(predicted_lineage(self.index, self.corpus, C, Category.MEDIUM, ContractScope.ALL), {S1, X})
        self.assertEqual(predicted_lineage(self.index, self.corpus, C, Category.LOW, ContractScope.ALL),
                         {S1, S2, X})

    def test_other_creators_are_not_predicted(self):
        corpus = make_corpus([], [contract(C), contract(S1), contract(S2), contract(X, creator=address(0xDD))])
        self.assertEqual(predicted_lineage(self.index, corpus, C, Category.MEDIUM, ContractScope.ALL), {S1})

    def test_unknown_query(self):
        with self.assertRaises(UnknownContract):
            predicted_lineage(self.index, self.corpus, address(0x99), Category.LOW, ContractScope.ALL)

    def test_query_without_fingerprint(self):
        corpus = make_corpus([], [contract(C), contract(address(0x99), open_source=False)])
        self.assertEqual(predicted_lineage(self.index, corpus, address(0x99), Category.LOW, ContractScope.ALL), set())

    def test_counts_at_medium(self):
        result, = evaluate(self.lineages, self.corpus, self.index, [Category.MEDIUM], [ContractScope.ALL])

        # C: {S1, X} against {S1, S2}; S1: {C, X} against {C, S2}; S2: nothing against {C, S1}
        self.assertEqual((result.tp, result.fp, result.fn), (2, 2, 4))
        self.assertEqual(result.precision, 0.5)
        self.assertEqual(result.recall, 2 / 6)

    def test_counts_at_low(self):
        result, = evaluate(self.lineages, self.corpus, self.index, [Category.LOW], [ContractScope.ALL])

        self.assertEqual((result.tp, result.fp, result.fn), (6, 3, 0))
        self.assertEqual(result.recall, 1.0)

    def test_macro_average(self):
        result, = evaluate(self.lineages, self.corpus, self.index, [Category.MEDIUM], [ContractScope.ALL],
                           average='macro')

        # S2 predicts nothing, its precision is undefined and left out
        self.assertEqual(result.precision, 0.5)
        self.assertEqual(result.recall, (0.5 + 0.5 + 0.0) / 3)

    def test_unknown_average(self):
        with self.assertRaises(ValueError):
            evaluate(self.lineages, self.corpus, self.index, average='weighted')

    def test_no_predictions(self):
        index = LSHIndex([fingerprint(C, 1, 1, 256), fingerprint(S1, 2, 1, 256)])
        result, = evaluate([lineage(address(0x1), CREATOR, C, S1)], self.corpus, index, [Category.LOW],
                           [ContractScope.ALL])

        self.assertIsNone(result.precision)
        self.assertEqual(result.recall, 0.0)

    def test_closed_source_members_leave_the_open_source_scope(self):
        corpus = make_corpus([], [contract(C), contract(S1, open_source=False)])
        index = LSHIndex([fingerprint(C, 1, 1, 256)])
        diagnostics = []
        results = evaluate([lineage(address(0x1), CREATOR, C, S1)], corpus, index, [Category.LOW],
                           [ContractScope.OPEN_SOURCE_ONLY, ContractScope.ALL], diagnostics=diagnostics)

        open_source, everything = results
        self.assertEqual((open_source.tp, open_source.fp, open_source.fn), (0, 0, 0))
        self.assertEqual((everything.tp, everything.fp, everything.fn), (0, 0, 2))
        self.assertEqual([diagnostic.code for diagnostic in diagnostics], [NO_GROUND_TRUTH])

    def test_scenario_table(self):
        results = evaluate(self.lineages, self.corpus, self.index, [Category.MEDIUM], [ContractScope.OPEN_SOURCE_ONLY])
        self.assertEqual(scenario_table(results), [{
            'contract type': 'Open-source',
            'threshold': 'Medium',
            'precision %': 50.0,
            'recall %': 33.33,
        }])

    def test_ground_truth_members(self):
        members = ground_truth_members([lineage(address(0x1), CREATOR, C, S1), lineage(address(0x2), CREATOR, S1, S2)])
        self.assertEqual(members[S1], {C, S1, S2})
        self.assertEqual(members[C], {C, S1})


class RandomCorpusTest(SimpleTestCase):
    """
    Families share a signature prefix of random length, so every pair at or
    above the lowest threshold shares a band and is an LSH candidate.
    """

    def build(self, seed):
        rng = random.Random(seed)
        creators = [address(0xC000 + index) for index in range(3)]
        contracts = []
        fingerprints = []
        lineages = []
        shared = {}

        for family in range(1, rng.randint(2, 8)):
            members = []
            for member in range(rng.randint(2, 6)):
                contract_address = address(family * 0x100 + member)
                creator = rng.choice(creators)
                open_source = rng.random() > 0.2
                contracts.append(contract(contract_address, creator=creator, open_source=open_source))
                if open_source:
                    shared[contract_address] = (family, rng.choice([0, 60, 130, 150, 190, 200, 240, 256]))
                    fingerprints.append(fingerprint(contract_address, family, member, shared[contract_address][1]))
                members.append((contract_address, creator))

            # Lineages are same-creator runs, the rest of the family is noise
            by_creator = {}
            for contract_address, creator in members:
                by_creator.setdefault(creator, []).append(contract_address)
            for index, (creator, addresses) in enumerate(sorted(by_creator.items())):
                if len(addresses) >= 2 and rng.random() > 0.3:
                    lineages.append(lineage(address(0xF000 + family * 0x10 + index), creator, *addresses))

        return make_corpus([], contracts), LSHIndex(fingerprints), lineages, shared

    def recount(self, corpus, lineages, shared, threshold, scope):
        """
        All-pairs decisions straight from the prefix lengths.
        """
        def in_scope(contract_address):
            return scope == ContractScope.ALL or corpus.contracts[contract_address].open_source

        members = {}
        for item in lineages:
            for member in item.addresses:
                members.setdefault(member, set()).update(item.addresses)

        truth = {}
        predictions = {}
        for query in sorted(members):
            if not in_scope(query):
                continue
            expected = {member for member in members[query] if member != query and in_scope(member)}
            if not expected:
                continue
            truth[query] = expected
            predictions[query] = set()
            if query not in shared:
                continue

            for candidate, (family, length) in shared.items():
                query_family, query_length = shared[query]
                if candidate == query or family != query_family or not in_scope(candidate):
                    continue
                if corpus.contracts[candidate].creator != corpus.contracts[query].creator:
                    continue
                if min(length, query_length) / 256 >= THRESHOLDS[threshold]:
                    predictions[query].add(candidate)

        return count_decisions(truth, predictions)

    def test_counts_match_all_pairs_recount(self):
        for seed in range(100):
            corpus, index, lineages, shared = self.build(seed)
            for result in evaluate(lineages, corpus, index):
                expected = self.recount(corpus, lineages, shared, result.threshold, result.contract_scope)
                self.assertEqual([result.tp, result.fp, result.fn], expected, 'seed {}'.format(seed))

    def test_recall_grows_as_the_threshold_drops(self):
        for seed in range(100):
            corpus, index, lineages, _shared = self.build(seed)
            for scope in ContractScope:
                results = evaluate(lineages, corpus, index, [Category.HIGH, Category.MEDIUM, Category.LOW], [scope])
                recalls = [result.recall for result in results if result.recall is not None]
                self.assertEqual(recalls, sorted(recalls))

    def test_open_source_scope_evaluates_fewer_pairs(self):
        for seed in range(100):
            corpus, index, lineages, _shared = self.build(seed)
            open_source, everything = evaluate(lineages, corpus, index, [Category.LOW],
                                               [ContractScope.OPEN_SOURCE_ONLY, ContractScope.ALL])
            self.assertLessEqual(open_source.tp + open_source.fn, everything.tp + everything.fn)
