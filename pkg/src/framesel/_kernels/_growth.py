"""Level-wise node bookkeeping shared by the tree growers."""

import numpy as np


def threshold_between(lo, hi):
    thr = lo + (hi - lo) / 2.0
    return np.where(thr >= hi, lo, thr)


class Grower:
    """Shared level-wise bookkeeping: node arrays and row-to-node assignment."""

    def __init__(self, n_rows: int, max_depth: int, active: np.ndarray):
        cap = min(2 ** (max_depth + 1) - 1, 2 * max(int(active.sum()), 1) - 1)
        self.feature = np.full(cap, -1, dtype=np.intp)
        self.threshold = np.zeros(cap)
        self.left = np.full(cap, -1, dtype=np.intp)
        self.right = np.full(cap, -1, dtype=np.intp)
        self.gain = np.zeros(cap)
        self.assign = np.where(active, 0, -1).astype(np.intp)
        self.first = 0
        self.width = 1
        self.next_id = 1

    def slots(self) -> np.ndarray:
        node_of = self.assign - self.first
        node_of[(self.assign < 0) | (node_of < 0)] = -1
        return node_of

    def split(self, X, node_of, do_split, feat, lo, hi, gain):
        chosen = np.flatnonzero(do_split)
        S = chosen.size
        ids = self.first + chosen
        left_of_slot = np.full(self.width, -1, dtype=np.intp)
        right_of_slot = np.full(self.width, -1, dtype=np.intp)
        left_of_slot[chosen] = self.next_id + 2 * np.arange(S)
        right_of_slot[chosen] = left_of_slot[chosen] + 1
        thr = threshold_between(lo, hi)
        self.feature[ids] = feat[chosen]
        self.threshold[ids] = thr[chosen]
        self.left[ids] = left_of_slot[chosen]
        self.right[ids] = right_of_slot[chosen]
        self.gain[ids] = gain[chosen]
        rows = np.flatnonzero(node_of >= 0)
        rows = rows[do_split[node_of[rows]]]
        s = node_of[rows]
        go_left = X[rows, feat[s]] <= thr[s]
        self.assign[rows] = np.where(go_left, left_of_slot[s], right_of_slot[s])
        self.first = self.next_id
        self.width = 2 * S
        self.next_id += 2 * S

    def finish(self, value):
        m = self.next_id
        return (self.feature[:m].copy(), self.threshold[:m].copy(), self.left[:m].copy(),
                self.right[:m].copy(), self.gain[:m].copy(), value[:m])
