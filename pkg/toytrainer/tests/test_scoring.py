import numpy as np
import pytest

from toytrainer import scoring


def test_hand_case_two_classes():
    # gt row 0: 2 right, 1 called class 1; gt row 1: 1 right.
    cm = np.array([[2, 1], [0, 1]], dtype=np.int64)
    s = scoring.scores_from_confusion(cm)
    assert round(s.aacc, 2) == 75.00
    assert round(s.miou, 2) == 58.33
    assert round(s.macc, 2) == 83.33


def test_absent_class_is_excluded_from_means():
    cm = np.zeros((3, 3), dtype=np.int64)
    cm[0, 0] = 10
    cm[1, 1] = 5
    cm[1, 0] = 5  # class 2 never appears in gt
    s = scoring.scores_from_confusion(cm)
    assert s.aacc == 75.0
    assert s.macc == 75.0  # (100 + 50) / 2
    assert round(s.miou, 4) == round((10 / 15 + 5 / 10) / 2 * 100, 4)


def test_miou_never_exceeds_macc_on_random_matrices():
    rng = np.random.default_rng(42)
    for _ in range(200):
        cm = rng.integers(0, 50, size=(4, 4)).astype(np.int64)
        if cm.sum() == 0 or not (cm.sum(axis=1) > 0).any():
            continue
        s = scoring.scores_from_confusion(cm)
        assert s.miou <= s.macc + 1e-9


def test_add_pair_ignores_255_and_checks_ranges():
    cm = scoring.new_confusion(2)
    gt = np.array([[0, 1], [255, 1]], dtype=np.uint8)
    pred = np.array([[0, 0], [1, 1]], dtype=np.uint8)
    scoring.add_pair(cm, gt, pred)
    assert cm.sum() == 3  # the 255 pixel does not count
    assert cm[0, 0] == 1 and cm[1, 0] == 1 and cm[1, 1] == 1

    with pytest.raises(ValueError):
        scoring.add_pair(cm, np.array([[2]], dtype=np.uint8), np.array([[0]], dtype=np.uint8))
    with pytest.raises(ValueError):
        scoring.add_pair(cm, gt, pred[:1])


def test_empty_confusion_rejected():
    with pytest.raises(ValueError):
        scoring.scores_from_confusion(scoring.new_confusion(3))


def test_pool_labels_majority_and_shape():
    lab = np.array(
        [
            [0, 1, 2, 2],
            [1, 1, 2, 0],
            [3, 3, 0, 0],
            [3, 0, 0, 0],
        ],
        dtype=np.uint8,
    )
    pooled = scoring.pool_labels(lab, 2, 4)
    assert pooled.shape == lab.shape
    # top-left cell: three 1s -> 1; top-right: two 2s, one 0... 2 vs 2? cells:
    # [[0,1],[1,1]] -> 1; [[2,2],[2,0]] -> 2; [[3,3],[3,0]] -> 3; [[0,0],[0,0]] -> 0
    assert pooled[0, 0] == 1 and pooled[1, 1] == 1
    assert pooled[0, 2] == 2
    assert pooled[2, 0] == 3
    assert pooled[2, 2] == 0


def test_pool_labels_tie_goes_to_smaller_class():
    lab = np.array([[0, 0], [1, 1]], dtype=np.uint8)
    assert (scoring.pool_labels(lab, 2, 2) == 0).all()


def test_pool_labels_ignore_does_not_vote():
    lab = np.full((2, 2), 255, dtype=np.uint8)
    lab[1, 1] = 3
    assert (scoring.pool_labels(lab, 2, 4) == 3).all()
    all_ignore = np.full((2, 2), 255, dtype=np.uint8)
    assert (scoring.pool_labels(all_ignore, 2, 4) == 255).all()


def test_pool_labels_identity_on_constant_cells():
    lab = np.repeat(np.repeat(np.arange(4, dtype=np.uint8).reshape(2, 2), 4, 0), 4, 1)
    assert np.array_equal(scoring.pool_labels(lab, 4, 4), lab)


def test_pool_labels_rejects_bad_width():
    with pytest.raises(ValueError):
        scoring.pool_labels(np.zeros((6, 6), dtype=np.uint8), 4, 2)
