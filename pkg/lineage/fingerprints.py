"""
Source fingerprints and similarity categories.

A fingerprint is a MinHash signature over the shingles of a contract's
normalized token stream. Two fingerprints agree on a slot with probability
equal to the Jaccard similarity of their shingle sets. The LSH index splits
signatures into bands to find candidates without comparing every pair.
"""

import hashlib
from collections import defaultdict
from typing import Dict, Iterable, List, Tuple

import numpy as np
from django.conf import settings
from django.core.exceptions import ImproperlyConfigured
from django.utils.translation import gettext as _

from generic.utils import print_debug
from lineage.exceptions import NotFingerprintable, ParseError, UnknownContract
from lineage.forms import FingerprintForm, form_errors_as_text
from lineage.records import Category, ContractRecord, Corpus, Fingerprint, SimilarityVerdict
from lineage.utils import canonical_ndjson, read_ndjson, write_text
from lineage.utils.lexer import normalized_tokens

MAX_HASH = np.uint64(0xFFFFFFFFFFFFFFFF)
CHUNK_SIZE = 4096


def _splitmix64(values):
    values = values + np.uint64(0x9E3779B97F4A7C15)
    values = (values ^ (values >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    values = (values ^ (values >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return values ^ (values >> np.uint64(31))


def slot_parameters(k: int, seed: int):
    """
    Per-slot (multiplier, increment), derived from the seed only.
    """
    if k < 1:
        raise ImproperlyConfigured(_('Signature length must be positive, got {k}').format(k=k))
    if seed < 0:
        raise ImproperlyConfigured(_('Seed must be non-negative, got {seed}').format(seed=seed))

    rng = np.random.default_rng(seed)
    multipliers = rng.integers(0, MAX_HASH, size=k, dtype=np.uint64, endpoint=True) | np.uint64(1)
    increments = rng.integers(0, MAX_HASH, size=k, dtype=np.uint64, endpoint=True)
    return multipliers, increments


def hash_item(item) -> int:
    data = item if isinstance(item, bytes) else str(item).encode('utf-8')
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), 'little')


def minhash_hashes(hashes: np.ndarray, k: int, seed: int) -> np.ndarray:
    signature = np.full(k, MAX_HASH, dtype=np.uint64)
    if not hashes.size:
        return signature

    multipliers, increments = slot_parameters(k, seed)
    with np.errstate(over='ignore'):
        for start in range(0, hashes.size, CHUNK_SIZE):
            chunk = hashes[start:start + CHUNK_SIZE, np.newaxis]
            values = _splitmix64(chunk * multipliers + increments)
            signature = np.minimum(signature, values.min(axis=0))

    return signature


def minhash(items: Iterable, k: int = None, seed: int = None) -> np.ndarray:
    """
    MinHash signature of an arbitrary set of hashable items.
    """
    k = k or settings.FINGERPRINT['K']
    seed = settings.FINGERPRINT['SEED'] if seed is None else seed

    hashes = np.array(sorted({hash_item(item) for item in items}), dtype=np.uint64)
    return minhash_hashes(hashes, k, seed)


def shingles(tokens: List[str], size: int = None) -> set:
    """
    Distinct runs of `size` consecutive tokens; a shorter stream is one shingle.
    """
    size = size or settings.FINGERPRINT['SHINGLE_SIZE']
    if not tokens:
        return set()
    if len(tokens) <= size:
        return {'\x1f'.join(tokens)}

    return {'\x1f'.join(tokens[start:start + size]) for start in range(len(tokens) - size + 1)}


def fingerprint(record: ContractRecord, k: int = None, seed: int = None) -> Fingerprint:
    if not record.open_source:
        raise NotFingerprintable(_('{address} has no open source').format(address=record.address))

    k = k or settings.FINGERPRINT['K']
    seed = settings.FINGERPRINT['SEED'] if seed is None else seed

    tokens = []
    for source_file in sorted(record.files, key=lambda f: (f.directory, f.filename)):
        tokens.extend(normalized_tokens(source_file.content))

    shingle_set = shingles(tokens)
    hashes = np.array(sorted(hash_item(shingle) for shingle in shingle_set), dtype=np.uint64)
    signature = minhash_hashes(hashes, k, seed)

    return Fingerprint(
        address=record.address,
        k=k,
        seed=seed,
        signature=tuple(int(value) for value in signature),
        shingle_count=len(shingle_set),
    )


def fingerprint_corpus(corpus: Corpus, addresses: Iterable[str] = None, k: int = None,
                       seed: int = None) -> Dict[str, Fingerprint]:
    """
    Fingerprints of every open-source contract, others are skipped.
    """
    if addresses is None:
        addresses = corpus.contracts

    fingerprints = {}
    for address in sorted(addresses):
        record = corpus.contracts.get(address)
        if record and record.open_source:
            fingerprints[address] = fingerprint(record, k, seed)

    print_debug(_('Fingerprinted {count} contracts').format(count=len(fingerprints)))
    return fingerprints


def category_for(estimated_jaccard: float) -> Category:
    thresholds = settings.SIMILARITY_THRESHOLDS
    for category in (Category.HIGH, Category.MEDIUM, Category.LOW):
        if estimated_jaccard >= thresholds[category.name]:
            return category
    return Category.NONE


def estimate_jaccard(first, second) -> float:
    return float(np.mean(np.asarray(first, dtype=np.uint64) == np.asarray(second, dtype=np.uint64)))


def compare(a: Fingerprint, b: Fingerprint) -> SimilarityVerdict:
    if a.k != b.k or a.seed != b.seed:
        raise ImproperlyConfigured(_('Cannot compare fingerprints with k={a_k}/seed={a_seed} and '
                                     'k={b_k}/seed={b_seed}').format(a_k=a.k, a_seed=a.seed, b_k=b.k, b_seed=b.seed))

    if a.is_sentinel or b.is_sentinel:
        return SimilarityVerdict(first=a.address, second=b.address, estimated_jaccard=0.0, category=Category.NONE)

    estimated = estimate_jaccard(a.signature, b.signature)
    return SimilarityVerdict(first=a.address, second=b.address, estimated_jaccard=estimated,
                             category=category_for(estimated))


class LSHIndex:
    """
    Banded index over fingerprints, read-only once built.
    """

    def __init__(self, fingerprints: Iterable[Fingerprint], bands: int = None, rows: int = None):
        self.bands = bands or settings.FINGERPRINT['BANDS']
        self.rows = rows or settings.FINGERPRINT['ROWS']
        self.fingerprints = {}
        self.buckets = defaultdict(list)

        for item in sorted(fingerprints, key=lambda f: f.address):
            if item.k != self.bands * self.rows:
                raise ImproperlyConfigured(_('{bands} bands x {rows} rows does not cover k={k}').format(
                    bands=self.bands, rows=self.rows, k=item.k))

            self.fingerprints[item.address] = item
            # Empty contracts would all share every bucket
            if item.is_sentinel:
                continue
            for band, key in self._band_keys(item):
                self.buckets[(band, key)].append(item.address)

    def _band_keys(self, item: Fingerprint):
        for band in range(self.bands):
            yield band, item.signature[band * self.rows:(band + 1) * self.rows]

    def __contains__(self, address):
        return address in self.fingerprints

    def __len__(self):
        return len(self.fingerprints)

    def get(self, address) -> Fingerprint:
        try:
            return self.fingerprints[address]
        except KeyError:
            raise UnknownContract(_('No fingerprint for {address}').format(address=address)) from None

    def candidates(self, address) -> List[str]:
        """
        Addresses sharing at least one band bucket with `address`.
        """
        item = self.get(address)
        if item.is_sentinel:
            return []

        found = set()
        for band_key in self._band_keys(item):
            found.update(self.buckets.get(band_key, ()))
        found.discard(address)
        return sorted(found)

    def query(self, address, min_category=Category.LOW) -> List[Tuple[str, SimilarityVerdict]]:
        query = self.get(address)
        results = []
        for candidate in self.candidates(address):
            verdict = compare(query, self.fingerprints[candidate])
            if verdict.category >= min_category:
                results.append((candidate, verdict))

        results.sort(key=lambda result: (-result[1].estimated_jaccard, result[0]))
        return results


def query_similar(fingerprints, query: str, min_category=Category.LOW, *, bands: int = None,
                  rows: int = None) -> List[Tuple[str, SimilarityVerdict]]:
    """
    Contracts similar to `query` at `min_category` or above, most similar first.
    """
    if not isinstance(fingerprints, LSHIndex):
        if isinstance(fingerprints, dict):
            fingerprints = fingerprints.values()
        fingerprints = LSHIndex(fingerprints, bands=bands, rows=rows)

    return fingerprints.query(query, min_category)


def dump_fingerprints(fingerprints: Iterable[Fingerprint], path):
    write_text(path, canonical_ndjson({
        'address': item.address,
        'k': item.k,
        'seed': item.seed,
        'shingle_count': item.shingle_count,
        'signature': ['{:016x}'.format(value) for value in item.signature],
    } for item in sorted(fingerprints, key=lambda f: f.address)))


def load_fingerprints(path) -> Dict[str, Fingerprint]:
    fingerprints = {}
    for lineno, data in read_ndjson(path):
        form = FingerprintForm(data=data)
        if not form.is_valid():
            raise ParseError(form_errors_as_text(form), path=path, lineno=lineno)

        item = Fingerprint(**form.cleaned_data)
        fingerprints[item.address] = item

    return fingerprints
