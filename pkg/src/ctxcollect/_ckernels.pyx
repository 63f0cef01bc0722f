# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; drop-in replacements for :mod:`ctxcollect._pykernels`."""

from libc.stdint cimport uint64_t, int64_t
from libcpp.vector cimport vector
from libcpp.algorithm cimport sort

from ctxcollect import _pykernels

cdef uint64_t FNV_OFFSET = 0xCBF29CE484222325ULL
cdef uint64_t FNV_PRIME = 0x100000001B3ULL


cdef int _bit_width(Py_ssize_t value):
    cdef int bits = 0
    while (<Py_ssize_t>1 << bits) < value:
        bits += 1
    return bits if bits > 0 else 1


cdef void _encode(vector[uint64_t]& ids, int n, int bits, vector[uint64_t]& out):
    cdef Py_ssize_t i, j, count = <Py_ssize_t>ids.size() - n + 1
    cdef uint64_t code
    out.clear()
    if count <= 0:
        return
    out.reserve(count)
    for i in range(count):
        code = 0
        for j in range(n):
            code = (code << bits) | ids[i + j]
        out.push_back(code)
    sort(out.begin(), out.end())


cdef int64_t _clipped_matches(vector[uint64_t]& a, vector[uint64_t]& b):
    cdef Py_ssize_t i = 0, j = 0, na = a.size(), nb = b.size(), ra, rb
    cdef int64_t total = 0
    cdef uint64_t key
    while i < na and j < nb:
        if a[i] < b[j]:
            i += 1
        elif b[j] < a[i]:
            j += 1
        else:
            key = a[i]
            ra = 0
            while i < na and a[i] == key:
                ra += 1
                i += 1
            rb = 0
            while j < nb and b[j] == key:
                rb += 1
                j += 1
            total += ra if ra < rb else rb
    return total


def ngram_match_stats(str hyp, str ref, int max_order):
    cdef dict alphabet = {}
    cdef vector[uint64_t] hid, rid, hcodes, rcodes
    cdef Py_UCS4 ch
    cdef int n, bits
    cdef Py_ssize_t lh = len(hyp), lr = len(ref)
    for ch in sorted(set(hyp) | set(ref)):
        alphabet[ch] = len(alphabet)
    for ch in hyp:
        hid.push_back(<uint64_t>alphabet[ch])
    for ch in ref:
        rid.push_back(<uint64_t>alphabet[ch])
    bits = _bit_width(len(alphabet))
    stats = []
    for n in range(1, max_order + 1):
        if n * bits > 64:
            # codes would not fit one machine word; exact dict counting instead
            stats.extend(_pykernels.ngram_match_stats(hyp, ref, max_order)[n - 1 :])
            break
        _encode(hid, n, bits, hcodes)
        _encode(rid, n, bits, rcodes)
        stats.append((
            lh - n + 1 if lh >= n else 0,
            lr - n + 1 if lr >= n else 0,
            _clipped_matches(hcodes, rcodes),
        ))
    return stats


def bm25_accumulate(double[:] scores, long long[:] docs, double[:] tfs, double[:] doc_len,
                    double idf, double k1, double b, double avg_len):
    cdef Py_ssize_t j, d
    cdef double tf
    for j in range(docs.shape[0]):
        d = docs[j]
        tf = tfs[j]
        scores[d] += idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * doc_len[d] / avg_len))


def hashed_ngram_vector(str text, int dim, int min_n, int max_n):
    cdef bytes data = text.encode("utf-8", "surrogatepass")
    cdef const unsigned char* raw = data
    cdef Py_ssize_t nbytes = len(data), i, k, length
    cdef vector[Py_ssize_t] starts
    cdef uint64_t h
    cdef int n
    vec = [0.0] * dim
    cdef double[:] acc
    import array
    buf = array.array("d", vec)
    acc = buf
    for i in range(nbytes):
        if (raw[i] & 0xC0) != 0x80:
            starts.push_back(i)
    starts.push_back(nbytes)
    length = <Py_ssize_t>starts.size() - 1
    for n in range(min_n, max_n + 1):
        for i in range(length - n + 1):
            h = FNV_OFFSET
            for k in range(starts[i], starts[i + n]):
                h = h ^ raw[k]
                h = h * FNV_PRIME
            if h & 1:
                acc[(h >> 1) % dim] -= 1.0
            else:
                acc[(h >> 1) % dim] += 1.0
    return buf.tolist()
