"""Slow reference implementations used as test oracles.

Everything here is deliberately naive (per-pixel loops, exhaustive
enumeration) and shares no code with the package under test.
"""

from itertools import permutations


def naive_scores(gt_maps, pred_maps, num_classes, ignore_label=255):
    """Per-pixel recount of aAcc / mAcc / mIoU as percentages."""
    tp = [0] * num_classes
    gt_count = [0] * num_classes
    pred_count = [0] * num_classes
    total = 0
    correct = 0
    for gt, pred in zip(gt_maps, pred_maps):
        h = len(gt)
        w = len(gt[0])
        for y in range(h):
            for x in range(w):
                g = gt[y][x]
                if g == ignore_label:
                    continue
                p = pred[y][x]
                total += 1
                gt_count[g] += 1
                pred_count[p] += 1
                if g == p:
                    correct += 1
                    tp[g] += 1
    recalls = []
    ious = []
    for c in range(num_classes):
        if gt_count[c] == 0:
            continue
        recalls.append(tp[c] / gt_count[c])
        ious.append(tp[c] / (gt_count[c] + pred_count[c] - tp[c]))
    aacc = 100.0 * correct / total
    macc = 100.0 * sum(recalls) / len(recalls)
    miou = 100.0 * sum(ious) / len(ious)
    return aacc, macc, miou


def apply_key_naive(tile, pixel_perms, channel_perm):
    """tile: list of 3 lists of n values. Returns the shuffled tile."""
    n = len(tile[0])
    out = []
    for c in range(3):
        src = channel_perm[c]
        out.append([tile[src][pixel_perms[src][i]] for i in range(n)])
    return out


def count_consistent_keys_ms2(plain_tile, cipher_tile):
    """Exhaustive count over all (4!)^3 * 3! = 82944 sub-block keys of those
    mapping plain to cipher. Tiles are lists of 3 lists of 4 values."""
    perms4 = list(permutations(range(4)))
    perms3 = list(permutations(range(3)))
    count = 0
    for cp in perms3:
        # Pixel perms act per source channel independently, so count each
        # channel's consistent perms and multiply.
        per_channel = []
        for c in range(3):
            src = cp[c]
            ok = 0
            for p in perms4:
                if all(plain_tile[src][p[i]] == cipher_tile[c][i] for i in range(4)):
                    ok += 1
            per_channel.append(ok)
        count += per_channel[0] * per_channel[1] * per_channel[2]
    return count
