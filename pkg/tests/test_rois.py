"""语义 ROI 测试：单应性、检测、三维化与合并"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from features.vocabulary_tree import VocabularyTree
from geometry.transforms import Pose
from mapping.models import GridGeometry
from mapping.occupancy_grid import OccupancyGrid
from rois.detection import DetectionThresholds, RoiDetector, detect_roi, is_convex, polygon_area
from rois.homography import apply_homography, homography_dlt, homography_dlt_ransac, symmetric_transfer_error
from rois.lifting import fit_plane, lift_roi, merge_rois
from rois.models import ROI3D, ReferenceAppearance, RoiDetection
from utils.exceptions import InsufficientPairs, NoConsensus

from helpers import keypoints_from, random_descriptors

H_TRUE = np.array([
    [1.2, 0.1, 150.0],
    [-0.05, 1.1, 80.0],
    [1e-4, -2e-4, 1.0],
])


def _reference(label, rng, n=40, size=(200.0, 120.0)):
    pixels = rng.uniform([0, 0], size, size=(n, 2))
    return ReferenceAppearance(label, keypoints_from(pixels, random_descriptors(rng, n)), size)


def _frame_of(reference, h, rng, clutter=40, noise=0.3):
    """参考关键点经单应映射到帧中，再加杂乱关键点"""
    src = np.array([kp.pixel for kp in reference.keypoints])
    desc = np.array([kp.descriptor for kp in reference.keypoints])
    dst = apply_homography(h, src) + rng.normal(scale=noise, size=src.shape)
    noisy = desc + rng.normal(scale=0.01, size=desc.shape)
    extra_px = rng.uniform([0, 0], [640, 480], size=(clutter, 2))
    return keypoints_from(np.vstack([dst, extra_px]), np.vstack([noisy, random_descriptors(rng, clutter)]))


class TestHomography:
    def test_dlt_recovers_known_homography(self, rng):
        src = rng.uniform(0, 200, size=(12, 2))
        h = homography_dlt(src, apply_homography(H_TRUE, src))
        assert_allclose(h, H_TRUE, rtol=1e-6, atol=1e-9)
        assert h[2, 2] == 1.0

    def test_dlt_needs_four_points(self):
        assert homography_dlt(np.zeros((3, 2)), np.zeros((3, 2))) is None

    def test_transfer_error_zero_for_exact_pairs(self, rng):
        src = rng.uniform(0, 200, size=(10, 2))
        assert_allclose(symmetric_transfer_error(H_TRUE, src, apply_homography(H_TRUE, src)), 0.0, atol=1e-8)

    def test_ransac_rejects_outliers(self, rng):
        src = rng.uniform(0, 200, size=(60, 2))
        dst = apply_homography(H_TRUE, src)
        bad = np.arange(0, 60, 3)
        dst[bad] += rng.uniform(30, 80, size=(len(bad), 2))
        h, mask = homography_dlt_ransac((src, dst), threshold_px=2.0, seed=4)
        assert not mask[bad].any()
        assert mask.sum() == 60 - len(bad)
        assert_allclose(apply_homography(h, src[~np.isin(np.arange(60), bad)]),
                        dst[~np.isin(np.arange(60), bad)], atol=1e-6)

    def test_ransac_accepts_pair_list(self, rng):
        src = rng.uniform(0, 200, size=(20, 2))
        pairs = list(zip(src, apply_homography(H_TRUE, src)))
        h, mask = homography_dlt_ransac(pairs)
        assert mask.all()

    def test_too_few_pairs(self):
        with pytest.raises(InsufficientPairs):
            homography_dlt_ransac((np.zeros((3, 2)), np.zeros((3, 2))))

    def test_random_pairs_have_no_consensus(self, rng):
        with pytest.raises(NoConsensus):
            homography_dlt_ransac((rng.uniform(0, 500, (30, 2)), rng.uniform(0, 500, (30, 2))),
                                  threshold_px=1.0, min_inliers=15)


class TestQuadChecks:
    def test_area_sign(self):
        square = np.array([[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]])
        assert polygon_area(square) == pytest.approx(100.0)
        assert polygon_area(square[::-1]) == pytest.approx(-100.0)

    def test_convexity(self):
        square = np.array([[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]])
        bowtie = np.array([[0.0, 0.0], [10.0, 10.0], [10.0, 0.0], [0.0, 10.0]])
        dart = np.array([[0.0, 0.0], [10.0, 0.0], [3.0, 3.0], [0.0, 10.0]])
        assert is_convex(square)
        assert not is_convex(bowtie)
        assert not is_convex(dart)


class TestDetection:
    def test_reference_needs_keypoints(self, rng):
        with pytest.raises(ValueError):
            _reference('tiny', rng, n=5)

    def test_detects_warped_reference(self, rng):
        cereal = _reference('cereal', rng)
        poster = _reference('poster', rng)
        detector = RoiDetector([cereal, poster], k=3, depth=2)
        detections = detector.detect(_frame_of(cereal, H_TRUE, rng), frame_index=7)
        assert [d.roi_label for d in detections] == ['cereal']
        det = detections[0]
        assert det.frame_index == 7
        assert det.inlier_count >= 30
        assert_allclose(det.corner_quad, apply_homography(H_TRUE, cereal.corners()), atol=2.0)

    def test_nothing_detected_in_clutter(self, rng):
        detector = RoiDetector([_reference('cereal', rng), _reference('poster', rng)])
        clutter = keypoints_from(rng.uniform([0, 0], [640, 480], (60, 2)), random_descriptors(rng, 60))
        assert detector.detect(clutter) == []

    def test_no_false_positives_over_many_clutter_frames(self, rng):
        cereal, poster = _reference('cereal', rng), _reference('poster', rng)
        detector = RoiDetector([cereal, poster])
        ref_desc = np.array([kp.descriptor for kp in cereal.keypoints + poster.keypoints])
        found = 0
        for seed in range(1000):
            frame_rng = np.random.default_rng(seed)
            # 杂乱关键点里混入少量真实参考描述子，但位置随机，没有一致的单应
            picked = ref_desc[frame_rng.choice(len(ref_desc), size=6, replace=False)]
            desc = np.vstack([random_descriptors(frame_rng, 60), picked])
            pixels = frame_rng.uniform([0, 0], [640, 480], (len(desc), 2))
            found += len(detector.detect(keypoints_from(pixels, desc), frame_index=seed))
        assert found == 0

    def test_degenerate_quad_rejected(self, rng):
        cereal = _reference('cereal', rng)
        tiny = np.diag([0.05, 0.05, 1.0])
        tiny[:2, 2] = [300.0, 200.0]
        thresholds = DetectionThresholds(min_area_px2=400.0)
        detector = RoiDetector([cereal, _reference('poster', rng)], thresholds=thresholds)
        assert detector.detect(_frame_of(cereal, tiny, rng, clutter=0, noise=0.0)) == []

    def test_functional_entry_point(self, rng):
        refs = [_reference('cereal', rng), _reference('poster', rng)]
        tree = VocabularyTree(3, 2).train(np.vstack([[kp.descriptor for kp in r.keypoints] for r in refs]))
        for i, r in enumerate(refs):
            tree.add_image(i, np.array([kp.descriptor for kp in r.keypoints]))
        detections = detect_roi(refs, tree, _frame_of(refs[1], H_TRUE, rng))
        assert [d.roi_label for d in detections] == ['poster']


@pytest.fixture
def wall_grid():
    grid = OccupancyGrid(GridGeometry((-1.0, -1.0, 0.0), 0.1, (20, 20, 30)))
    grid.logodds[:, :, 20] = 1.0
    return grid


def _detection(quad, label='cereal', frame_index=0):
    return RoiDetection(label, frame_index, np.eye(3), np.asarray(quad, dtype=float), 20)


class TestLifting:
    def test_fit_plane(self, rng):
        points = np.c_[rng.uniform(-1, 1, (10, 2)), np.full(10, 3.0)]
        centroid, normal, dist = fit_plane(points)
        assert abs(normal[2]) == pytest.approx(1.0)
        assert_allclose(dist, 0.0, atol=1e-12)
        assert centroid[2] == pytest.approx(3.0)

    def test_lift_onto_wall(self, intr, wall_grid):
        quad = [[220.0, 140.0], [420.0, 140.0], [420.0, 340.0], [220.0, 340.0]]
        roi = lift_roi(_detection(quad), Pose.identity(), intr, wall_grid)
        assert roi is not None
        assert_allclose(roi.polygon[:, 2], 2.0, atol=1e-9)
        assert_allclose(roi.polygon[0, :2], [-0.4, -0.4], atol=1e-9)
        assert_allclose(roi.normal, [0.0, 0.0, -1.0], atol=1e-9)
        assert roi.support_count == 1

    def test_corner_missing_the_grid(self, intr, wall_grid):
        quad = [[0.0, 0.0], [420.0, 140.0], [420.0, 340.0], [220.0, 340.0]]
        assert lift_roi(_detection(quad), Pose.identity(), intr, wall_grid) is None

    def test_corner_rays_grazing_past_a_box(self, intr, wall_grid):
        # 盒子正面 x, y ∈ [-0.3, 0.3), z = 1.2；四角射线恰好擦过盒子边缘打到后方墙面
        wall_grid.logodds[7:13, 7:13, 12] = 1.0
        quad = [[192.0, 112.0], [448.0, 112.0], [448.0, 368.0], [192.0, 368.0]]
        roi = lift_roi(_detection(quad), Pose.identity(), intr, wall_grid)
        assert roi is not None
        assert_allclose(roi.polygon[:, 2], 1.2, atol=1e-9)
        assert_allclose(roi.polygon[0], [-0.3072, -0.3072, 1.2], atol=1e-9)
        assert_allclose(roi.polygon[2], [0.3072, 0.3072, 1.2], atol=1e-9)
        assert_allclose(roi.centroid, [0.0, 0.0, 1.2], atol=1e-9)
        assert_allclose(roi.normal, [0.0, 0.0, -1.0], atol=1e-9)

    def test_occluded_corner_is_rejected(self, intr, wall_grid):
        wall_grid.logodds[7:13, 7:13, 12] = 1.0
        # 只挡住左上角射线的遮挡体素，z ∈ [1.0, 1.1)
        wall_grid.logodds[7, 7, 10] = 1.0
        quad = [[192.0, 112.0], [448.0, 112.0], [448.0, 368.0], [192.0, 368.0]]
        assert lift_roi(_detection(quad), Pose.identity(), intr, wall_grid) is None

    def test_lift_through_a_projective_homography(self, intr, wall_grid):
        h = np.array([[1.1, 0.05, 200.0], [0.02, 0.9, 150.0], [2e-4, 1e-4, 1.0]])
        quad = apply_homography(h, [[0.0, 0.0], [200.0, 0.0], [200.0, 160.0], [0.0, 160.0]])
        roi = lift_roi(RoiDetection('cereal', 0, h, quad, 20), Pose.identity(), intr, wall_grid)
        assert roi is not None
        expected = np.c_[(quad - [intr.cx, intr.cy]) / intr.fx * 2.0, np.full(4, 2.0)]
        assert_allclose(roi.polygon, expected, atol=1e-9)

    def test_non_planar_corners(self, intr, wall_grid):
        wall_grid.logodds[10:, :10, 20] = 0.0
        wall_grid.logodds[10:, :10, 25] = 1.0
        quad = [[220.0, 140.0], [420.0, 140.0], [420.0, 340.0], [220.0, 340.0]]
        assert lift_roi(_detection(quad), Pose.identity(), intr, wall_grid) is None


def _square(center, label='cereal', support=1, size=0.2):
    c = np.asarray(center, dtype=float)
    h = size / 2
    polygon = c + np.array([[-h, -h, 0.0], [h, -h, 0.0], [h, h, 0.0], [-h, h, 0.0]])
    return ROI3D(label, polygon, (0.0, 0.0, -1.0), support)


class TestMerge:
    def test_nearby_observations_merge(self):
        merged = merge_rois([_square((0.0, 0.0, 2.0)), _square((0.04, 0.0, 2.0))])
        assert len(merged) == 1
        assert merged[0].support_count == 2
        assert_allclose(merged[0].centroid, (0.02, 0.0, 2.0), atol=1e-12)

    def test_far_instances_stay_separate(self):
        merged = merge_rois([_square((0.0, 0.0, 2.0)), _square((1.0, 0.0, 2.0))])
        assert len(merged) == 2

    def test_labels_never_merge(self):
        merged = merge_rois([_square((0.0, 0.0, 2.0)), _square((0.0, 0.0, 2.0), label='poster')])
        assert [r.roi_label for r in merged] == ['cereal', 'poster']

    def test_support_weighted_average(self):
        merged = merge_rois([_square((0.0, 0.0, 2.0), support=3), _square((0.08, 0.0, 2.0), support=1)])
        assert_allclose(merged[0].centroid, (0.02, 0.0, 2.0), atol=1e-12)
        assert merged[0].support_count == 4

    def test_merge_is_idempotent(self, rng):
        observations = [
            _square(rng.uniform(-0.03, 0.03, 3) + c, label=label)
            for c, label in [((0, 0, 2), 'cereal'), ((1, 0, 2), 'cereal'), ((0, 1, 2), 'poster')]
            for _ in range(4)
        ]
        once = merge_rois(observations)
        twice = merge_rois(once)
        assert len(once) == len(twice) == 3
        for a, b in zip(once, twice):
            assert a.roi_label == b.roi_label
            assert_allclose(a.polygon, b.polygon)
            assert a.support_count == b.support_count

    def test_chained_clusters_converge(self):
        # 第一轮得到的两个簇质心在半径内，第二轮继续合并
        observations = [_square((x, 0.0, 2.0)) for x in (0.0, 0.16, 0.08)]
        merged = merge_rois(observations, radius=0.15)
        assert len(merged) == 1
        assert merged[0].support_count == 3
