# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled round kernel; semantics identical to ``_kernel_py.run_round``.

Operates on the same flat int64/int8 numpy arrays via typed memoryviews
and is selected automatically at import when the extension is built.
"""

from libc.stdint cimport int64_t, int8_t
from libc.stdlib cimport malloc, free

BACKEND_NAME = "cython"


def run_round(
    int8_t[::1] ground,
    int64_t[:, ::1] tables,
    int64_t[:, :, ::1] last_sent,
    int64_t[::1] schedule,
    int64_t[::1] plan_off,
    int64_t[::1] plan_tgt,
    int adaptive,
    int transfers,
    int8_t[:, ::1] forced,
    int64_t[::1] out_tester,
    int64_t[::1] out_tested,
    int8_t[::1] out_verdict,
    int64_t[::1] out_items_off,
    int64_t[::1] out_item_subject,
    int64_t[::1] out_item_ts,
    int8_t[::1] out_item_merged,
):
    cdef Py_ssize_t n = tables.shape[0]
    cdef Py_ssize_t n_tests = 0, n_items = 0
    cdef int64_t n_changes = 0, n_forced = 0
    cdef Py_ssize_t k, idx, tester, j, s
    cdef int64_t entry, updated, v
    cdef bint suspect, alive
    cdef int8_t merged

    cdef int8_t* tested_mask = <int8_t*> malloc(n * sizeof(int8_t))
    if tested_mask == NULL:
        raise MemoryError()

    try:
        out_items_off[0] = 0
        for k in range(schedule.shape[0]):
            tester = schedule[k]
            if ground[tester] != 1:
                raise AssertionError(
                    f"scheduled tester {tester} is not correct"
                )
            for s in range(n):
                tested_mask[s] = 0

            for idx in range(plan_off[k], plan_off[k + 1]):
                j = plan_tgt[idx]
                alive = ground[j] == 1
                suspect = (not alive) or forced[tester, j] != 0
                if alive and forced[tester, j] != 0:
                    n_forced += 1

                entry = tables[tester, j]
                if entry == -1:
                    updated = 1 if suspect else 0
                elif suspect != (entry % 2 == 1):
                    updated = entry + 1
                else:
                    updated = entry
                if updated != entry:
                    tables[tester, j] = updated
                    n_changes += 1
                tested_mask[j] = 1

                out_tester[n_tests] = tester
                out_tested[n_tests] = j
                out_verdict[n_tests] = 0 if suspect else 1

                if (not suspect) and transfers:
                    for s in range(n):
                        if s == j or s == tester:
                            continue
                        v = tables[j, s]
                        if v != -1 and v > last_sent[j, tester, s]:
                            last_sent[j, tester, s] = v
                            merged = 0
                            if tested_mask[s] == 0 and v > tables[tester, s]:
                                tables[tester, s] = v
                                n_changes += 1
                                merged = 1
                            out_item_subject[n_items] = s
                            out_item_ts[n_items] = v
                            out_item_merged[n_items] = merged
                            n_items += 1

                n_tests += 1
                out_items_off[n_tests] = n_items

                if adaptive and not suspect:
                    break
    finally:
        free(tested_mask)

    return n_tests, n_items, int(n_changes), int(n_forced)
