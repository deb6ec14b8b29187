import random

from django.test import SimpleTestCase

from lineage.ingest import load_corpus
from lineage.lineages import activity_windows, build_lineages, contract_pairs, select_creator
from lineage.records import ActivityWindow, ExclusionReason
from lineage.tests.utils import (address, brute_force_lineages, fixture, make_contract, make_corpus, make_event,
                                 random_corpus)

P = '0x' + '1' * 40
A = '0x' + 'a' * 40
B = '0x' + 'b' * 40
C = '0x' + 'c' * 40
X = '0x' + 'd' * 40
Y = '0x' + 'e' * 40


def windows_corpus(windows, creators):
    """
    One proxy, callee -> (first, last) windows.
    """
    events = []
    for callee, (first, last) in windows.items():
        events.append(make_event(P, callee, first))
        if last != first:
            events.append(make_event(P, callee, last))
    return make_corpus(events, [make_contract(callee, creator) for callee, creator in creators.items()])


class ActivityWindowTest(SimpleTestCase):
    def test_first_and_last_call(self):
        corpus = make_corpus([make_event(P, A, 100), make_event(P, A, 200), make_event(P, A, 150)], [])
        self.assertEqual(activity_windows(corpus), {(P, A): ActivityWindow(100, 200)})

    def test_single_call(self):
        corpus = make_corpus([make_event(P, A, 42)], [])
        self.assertEqual(activity_windows(corpus), {(P, A): ActivityWindow(42, 42)})

    def test_windows_are_per_proxy(self):
        other = address(0x22)
        corpus = make_corpus([make_event(P, A, 1), make_event(other, A, 5), make_event(other, A, 9)], [])
        windows = activity_windows(corpus)

        self.assertEqual(windows[(P, A)], ActivityWindow(1, 1))
        self.assertEqual(windows[(other, A)], ActivityWindow(5, 9))


class BuildLineagesTest(SimpleTestCase):
    def test_other_creator_is_excluded(self):
        corpus = load_corpus(fixture('three_callees', 'traces.ndjson'), fixture('three_callees', 'contracts.ndjson'))
        lineages, diagnostics = build_lineages(corpus)

        self.assertEqual(len(lineages), 1)
        self.assertEqual(lineages[0].proxy, P)
        self.assertEqual(lineages[0].creator, X)
        self.assertEqual(lineages[0].addresses, [A, B])
        self.assertEqual(diagnostics.reasons(), {(P, C): ExclusionReason.NOT_SAME_CREATOR})

    def test_touching_windows_overlap(self):
        corpus = windows_corpus({A: (1, 10), B: (10, 20)}, {A: X, B: X})
        lineages, diagnostics = build_lineages(corpus)

        self.assertEqual(lineages, [])
        self.assertEqual(diagnostics.reasons(), {
            (P, A): ExclusionReason.SINGLETON,
            (P, B): ExclusionReason.OVERLAPPING_WINDOW,
        })

    def test_single_callee_is_not_a_lineage(self):
        corpus = windows_corpus({A: (1, 10)}, {A: X})
        lineages, diagnostics = build_lineages(corpus)

        self.assertEqual(lineages, [])
        self.assertEqual(diagnostics.reasons(), {(P, A): ExclusionReason.SINGLETON})

    def test_equal_timestamps_keep_the_lower_address(self):
        corpus = windows_corpus({A: (5, 5), B: (5, 5), C: (8, 9)}, {A: X, B: X, C: X})
        lineages, diagnostics = build_lineages(corpus)

        self.assertEqual(lineages[0].addresses, [A, C])
        self.assertEqual(diagnostics.reasons(), {(P, B): ExclusionReason.OVERLAPPING_WINDOW})

    def test_unresolved_callee(self):
        corpus = windows_corpus({A: (1, 2), B: (3, 4), C: (5, 6)}, {A: X, B: X})
        lineages, diagnostics = build_lineages(corpus)

        self.assertEqual(lineages[0].addresses, [A, B])
        self.assertEqual(diagnostics.reasons(), {(P, C): ExclusionReason.UNRESOLVED_METADATA})

    def test_creator_tie_goes_to_the_earliest_group(self):
        corpus = windows_corpus({A: (5, 6), B: (1, 2)}, {A: X, B: Y})
        lineages, diagnostics = build_lineages(corpus)

        self.assertEqual(lineages, [])
        self.assertEqual(diagnostics.reasons(), {
            (P, A): ExclusionReason.NOT_SAME_CREATOR,
            (P, B): ExclusionReason.SINGLETON,
        })

    def test_select_creator(self):
        windows = {A: ActivityWindow(3, 4), B: ActivityWindow(1, 2), C: ActivityWindow(5, 6)}
        self.assertEqual(select_creator({X: [A, C], Y: [B]}, windows), X)
        self.assertEqual(select_creator({X: [A], Y: [B]}, windows), Y)
        self.assertEqual(select_creator({Y: [A], X: [A]}, windows), X)
        self.assertIsNone(select_creator({}, windows))

    def test_without_creator_rule(self):
        corpus = windows_corpus({A: (1, 2), B: (3, 4)}, {A: X, B: Y})
        self.assertEqual(build_lineages(corpus)[0], [])

        lineages, diagnostics = build_lineages(corpus, same_creator=False)
        self.assertEqual(lineages[0].addresses, [A, B])
        self.assertEqual(lineages[0].creator, X)
        self.assertEqual(diagnostics.exclusions, [])

    def test_proxy_subset(self):
        other = address(0x22)
        corpus = make_corpus(
            [make_event(P, A, 1), make_event(P, B, 5), make_event(other, A, 1), make_event(other, B, 5)],
            [make_contract(A, X), make_contract(B, X)],
        )
        lineages, diagnostics = build_lineages(corpus, proxies=[other])

        self.assertEqual([lineage.proxy for lineage in lineages], [other])
        self.assertEqual(diagnostics.exclusions, [])

    def test_empty_corpus(self):
        lineages, diagnostics = build_lineages(make_corpus([], []))
        self.assertEqual(lineages, [])
        self.assertEqual(diagnostics.exclusions, [])

    def test_matches_brute_force_rules(self):
        for seed in range(1000):
            corpus = random_corpus(random.Random(seed), max_proxies=10, max_contracts=40, max_callees=6)
            lineages, diagnostics = build_lineages(corpus)
            expected_lineages, expected_reasons = brute_force_lineages(corpus)

            self.assertEqual({lineage.proxy: (lineage.creator, lineage.addresses) for lineage in lineages},
                             expected_lineages, 'seed {}'.format(seed))
            self.assertEqual(diagnostics.reasons(), expected_reasons, 'seed {}'.format(seed))

    def test_every_callee_is_accounted_for(self):
        for seed in range(200):
            corpus = random_corpus(random.Random(seed))
            lineages, diagnostics = build_lineages(corpus)

            kept = [(lineage.proxy, member) for lineage in lineages for member in lineage.addresses]
            excluded = [(exclusion.proxy, exclusion.callee) for exclusion in diagnostics.exclusions]
            self.assertEqual(sorted(kept + excluded), corpus.observations())

            for lineage in lineages:
                self.assertGreaterEqual(len(lineage), 2)
                for earlier, later in zip(lineage.versions, lineage.versions[1:]):
                    self.assertLess(earlier.window.last_call, later.window.first_call)
                for version in lineage.versions:
                    self.assertEqual(corpus.contracts[version.address].creator, lineage.creator)

    def test_event_order_does_not_matter(self):
        corpus = random_corpus(random.Random(99))
        reordered = make_corpus(list(reversed(corpus.events)), corpus.contracts.values())

        self.assertEqual(build_lineages(corpus), build_lineages(reordered))


class ContractPairsTest(SimpleTestCase):
    def test_gap_in_days(self):
        corpus = windows_corpus({A: (0, 86400), B: (3 * 86400, 4 * 86400), C: (4 * 86400 + 43200, 5 * 86400)},
                                {A: X, B: X, C: X})
        pairs = contract_pairs(build_lineages(corpus)[0])

        self.assertEqual([(pair.predecessor, pair.successor) for pair in pairs], [(A, B), (B, C)])
        self.assertEqual([pair.gap_days for pair in pairs], [2.0, 0.5])
        self.assertEqual(pairs[0].predecessor_window, ActivityWindow(0, 86400))

    def test_no_lineages(self):
        self.assertEqual(contract_pairs([]), [])
