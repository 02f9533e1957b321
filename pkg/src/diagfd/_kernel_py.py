"""Pure-Python round kernel; reference semantics for the compiled twin.

Executes one testing round over flat numpy state arrays:

``ground``      int8[n]       1 = correct, 0 = failed
``tables``      int64[n, n]   tables[i][j] = timestamp i holds for j
``last_sent``   int64[n, n, n] last_sent[tested][tester][s] = snapshot
``schedule``    int64[k]      testers in execution order (all correct)
``plan_off/plan_tgt``         concatenated per-tester target lists
``forced``      int8[n, n]    forced[t][j] = inject a false suspicion

Per scheduled tester, targets run in plan order. A test verdict is suspect
iff the target has crashed or an injection fires; otherwise the tester
pulls the tested process's diagnostic delta (subjects other than the two
endpoints, newer than last sent), advances the snapshot, and max-merges
every item whose subject it has not itself tested this round. Adaptive
plans stop after the first correct verdict. Deltas propagate test by test,
so later tests in the same round observe earlier results.

Outputs land in preallocated arrays (one slot per executed test, item
slices addressed by ``out_items_off``); the return value is the tuple
``(n_tests, n_items, n_changes, n_forced)`` where ``n_changes`` counts
table-entry updates (records and merges) — a round with zero changes and
zero items has reached quiescence.
"""

from __future__ import annotations

BACKEND_NAME = "python"


def run_round(
    ground,
    tables,
    last_sent,
    schedule,
    plan_off,
    plan_tgt,
    adaptive,
    transfers,
    forced,
    out_tester,
    out_tested,
    out_verdict,
    out_items_off,
    out_item_subject,
    out_item_ts,
    out_item_merged,
):
    n = tables.shape[0]
    g = ground.tolist()
    forced_rows = forced.tolist()
    order = schedule.tolist()
    offsets = plan_off.tolist()
    targets_flat = plan_tgt.tolist()

    n_tests = 0
    n_items = 0
    n_changes = 0
    n_forced = 0
    out_items_off[0] = 0

    for k, tester in enumerate(order):
        if g[tester] != 1:
            raise AssertionError(f"scheduled tester {tester} is not correct")
        row = tables[tester].tolist()
        forced_row = forced_rows[tester]
        tested_mask = [False] * n

        for idx in range(offsets[k], offsets[k + 1]):
            j = targets_flat[idx]
            alive = g[j] == 1
            suspect = (not alive) or bool(forced_row[j])
            if alive and forced_row[j]:
                n_forced += 1

            entry = row[j]
            if entry == -1:
                updated = 1 if suspect else 0
            elif suspect != (entry % 2 == 1):
                updated = entry + 1
            else:
                updated = entry
            if updated != entry:
                row[j] = updated
                n_changes += 1
            tested_mask[j] = True

            out_tester[n_tests] = tester
            out_tested[n_tests] = j
            out_verdict[n_tests] = 0 if suspect else 1

            if not suspect and transfers:
                tested_row = tables[j].tolist()
                sent = last_sent[j, tester].tolist()
                dirty = False
                for s in range(n):
                    if s == j or s == tester:
                        continue
                    v = tested_row[s]
                    if v != -1 and v > sent[s]:
                        sent[s] = v
                        dirty = True
                        merged = 0
                        if not tested_mask[s] and v > row[s]:
                            row[s] = v
                            n_changes += 1
                            merged = 1
                        out_item_subject[n_items] = s
                        out_item_ts[n_items] = v
                        out_item_merged[n_items] = merged
                        n_items += 1
                if dirty:
                    last_sent[j, tester] = sent

            n_tests += 1
            out_items_off[n_tests] = n_items

            if adaptive and not suspect:
                break

        tables[tester] = row

    return n_tests, n_items, n_changes, n_forced
