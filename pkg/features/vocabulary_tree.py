#!/usr/bin/env python3
"""
词汇树
层次 k-means 量化 + 倒排文件 + TF-IDF 打分（L1 归一化、L1 距离）
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from threading import Lock
from typing import Optional

import numpy as np

from utils.exceptions import DimensionMismatch, EmptyDatabase, TooFewDescriptors, UntrainedTree

logger = logging.getLogger(__name__)

MAX_LLOYD_ITERATIONS = 50
KMEANS_RESTARTS = 3


@dataclass
class TreeNode:
    centroid: np.ndarray
    children: list = field(default_factory=list)
    leaf_id: Optional[int] = None

    @property
    def is_leaf(self):
        return not self.children


def _kmeans_pp(data, k, rng):
    """k-means++ 初始化"""
    n = len(data)
    centers = [data[rng.integers(n)]]
    d2 = np.sum((data - centers[0]) ** 2, axis=1)
    for _ in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers.append(data[idx])
        d2 = np.minimum(d2, np.sum((data - data[idx]) ** 2, axis=1))
    return np.array(centers, dtype=float)


def _sq_distances(data, centers):
    return np.sum((data[:, None, :] - centers[None, :, :]) ** 2, axis=2)


def kmeans(data, k, rng, max_iter=MAX_LLOYD_ITERATIONS):
    """
    Lloyd k-means，空簇重新放到离自身中心最远的点上

    Returns:
        (centers (k, D), labels (N,), inertia)
    """
    centers = _kmeans_pp(data, k, rng)
    labels = None
    for _ in range(max_iter):
        dist = _sq_distances(data, centers)
        new_labels = np.argmin(dist, axis=1)

        own = dist[np.arange(len(data)), new_labels]
        for c in range(k):
            if not np.any(new_labels == c):
                far = int(np.argmax(own))
                new_labels[far] = c
                centers[c] = data[far]
                own[far] = -1.0

        if labels is not None and np.array_equal(labels, new_labels):
            break
        labels = new_labels
        for c in range(k):
            centers[c] = data[labels == c].mean(axis=0)

    inertia = float(np.sum((data - centers[labels]) ** 2))
    return centers, labels, inertia


class VocabularyTree:
    """词汇树：训练后支持量化、入库与检索"""

    def __init__(self, k, depth):
        if k < 2:
            raise ValueError(f"分支数 k 必须 >= 2: {k}")
        if depth < 1:
            raise ValueError(f"深度必须 >= 1: {depth}")
        self.k = k
        self.depth = depth
        self.dimension = None
        self.nodes = []
        self.leaf_count = 0
        self._inverted = {}
        self._image_words = {}
        self._idf = None
        self._lock = Lock()

    @property
    def trained(self):
        return bool(self.nodes)

    @property
    def image_count(self):
        return len(self._image_words)

    def _build(self, data, level, rng):
        """深度优先建树，返回节点下标"""
        index = len(self.nodes)
        self.nodes.append(TreeNode(centroid=data.mean(axis=0)))
        distinct = len(np.unique(data, axis=0))
        if level >= self.depth or distinct < self.k:
            self.nodes[index].leaf_id = self.leaf_count
            self.leaf_count += 1
            return index

        best = None
        for _ in range(KMEANS_RESTARTS):
            centers, labels, inertia = kmeans(data, self.k, rng)
            if best is None or inertia < best[2]:
                best = (centers, labels, inertia)
        centers, labels, _ = best

        children = []
        for c in range(self.k):
            child = self._build(data[labels == c], level + 1, rng)
            self.nodes[child].centroid = centers[c]
            children.append(child)
        self.nodes[index].children = children
        return index

    def train(self, descriptors, seed=0):
        data = np.asarray(descriptors, dtype=float)
        if data.ndim != 2 or len(data) < self.k:
            raise TooFewDescriptors(f"训练至少需要 {self.k} 个描述子，实际 {len(data)}")
        rng = np.random.default_rng(seed)
        with self._lock:
            self.nodes = []
            self.leaf_count = 0
            self.dimension = data.shape[1]
            self._build(data, 0, rng)
            self._inverted = {}
            self._image_words = {}
            self._idf = None
        logger.info(f"词汇树训练完成: k={self.k}, L={self.depth}, {self.leaf_count} 个叶子")
        return self

    def quantize(self, descriptor):
        """贪心下降到最近子节点，平局取下标最小的子节点"""
        if not self.trained:
            raise UntrainedTree("词汇树尚未训练")
        d = np.asarray(descriptor, dtype=float).reshape(-1)
        if len(d) != self.dimension:
            raise DimensionMismatch(f"描述子维度 {len(d)} 与词汇树维度 {self.dimension} 不一致")
        node = self.nodes[0]
        while not node.is_leaf:
            centers = np.array([self.nodes[c].centroid for c in node.children])
            best = int(np.argmin(np.sum((centers - d) ** 2, axis=1)))
            node = self.nodes[node.children[best]]
        return node.leaf_id

    def leaf_centroids(self):
        return {n.leaf_id: n.centroid for n in self.nodes if n.is_leaf}

    def _words(self, descriptors):
        return Counter(self.quantize(d) for d in np.asarray(descriptors, dtype=float).reshape(-1, self.dimension))

    def add_image(self, image_id, descriptors):
        """把一幅图像的描述子加入数据库，同一 image_id 的词频累加"""
        if not self.trained:
            raise UntrainedTree("词汇树尚未训练")
        words = self._words(descriptors) if len(descriptors) else Counter()
        with self._lock:
            counts = self._image_words.setdefault(image_id, Counter())
            counts.update(words)
            for w, c in words.items():
                posting = self._inverted.setdefault(w, {})
                posting[image_id] = posting.get(image_id, 0) + c
            self._idf = None

    def idf(self):
        """IDF = ln(N / N_w)，按需计算并缓存"""
        with self._lock:
            if self._idf is None:
                n_images = len(self._image_words)
                weights = np.zeros(self.leaf_count)
                for w, posting in self._inverted.items():
                    if posting:
                        weights[w] = math.log(n_images / len(posting))
                self._idf = weights
            return self._idf

    def signature(self, words, idf=None):
        """IDF 加权词频向量，L1 归一化；全零时保持零向量"""
        idf = self.idf() if idf is None else idf
        vec = np.zeros(self.leaf_count)
        for w, c in words.items():
            vec[w] = c * idf[w]
        norm = np.sum(np.abs(vec))
        return vec / norm if norm > 0 else vec

    def query_image(self, descriptors, top_n=None):
        """
        检索数据库

        Returns:
            [(image_id, score)]，score 为 L1 距离，升序，平局按 image_id
        """
        if not self.trained:
            raise UntrainedTree("词汇树尚未训练")
        if not self._image_words:
            raise EmptyDatabase("数据库中没有图像")
        idf = self.idf()
        q = self.signature(self._words(descriptors) if len(descriptors) else Counter(), idf)
        results = []
        for image_id, words in self._image_words.items():
            s = self.signature(words, idf)
            results.append((image_id, float(np.sum(np.abs(q - s)))))
        results.sort(key=lambda r: (r[1], r[0]))
        return results if top_n is None else results[:top_n]


def build_vocabulary(descriptors, k, depth, seed=0):
    """训练一棵词汇树"""
    return VocabularyTree(k, depth).train(descriptors, seed)


def quantize(tree, descriptor):
    return tree.quantize(descriptor)


def add_image(tree, image_id, descriptors):
    tree.add_image(image_id, descriptors)


def query_image(tree, descriptors, top_n=None):
    return tree.query_image(descriptors, top_n)
