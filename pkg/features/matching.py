#!/usr/bin/env python3
"""
描述子最近邻匹配 + 比值检验
"""

import numpy as np

from features.models import Match
from utils.exceptions import DimensionMismatch, EmptyTrainSet

CHUNK_SIZE = 256


def _two_nearest(query, train):
    """
    每个 query 的最近与次近 train 下标

    平方距离用展开式分块计算，前两名的距离再精确重算
    """
    train_sq = np.sum(train ** 2, axis=1)
    nearest = np.empty((len(query), 2), dtype=int)
    for start in range(0, len(query), CHUNK_SIZE):
        q = query[start:start + CHUNK_SIZE]
        d2 = np.sum(q ** 2, axis=1)[:, None] - 2.0 * q @ train.T + train_sq[None, :]
        if train.shape[0] >= 2:
            part = np.argpartition(d2, 1, axis=1)[:, :2]
        else:
            part = np.zeros((len(q), 2), dtype=int)
        nearest[start:start + len(q)] = part
    return nearest


def match_descriptors(query, train, ratio_threshold=0.8):
    """
    比值检验匹配

    Args:
        query: (Nq, D) 描述子
        train: (Nt, D) 描述子
        ratio_threshold: d1/d2 严格小于该值才接受

    Returns:
        Match 列表，按 query_index 升序，每个 query 至多一个
    """
    train = np.asarray(train, dtype=float)
    query = np.asarray(query, dtype=float)
    if train.size == 0 or len(train) == 0:
        raise EmptyTrainSet("匹配的训练集为空")
    if not 0.0 < ratio_threshold <= 1.0:
        raise ValueError(f"ratio_threshold 必须在 (0, 1] 内: {ratio_threshold}")
    if len(query) == 0:
        return []
    if query.shape[1] != train.shape[1]:
        raise DimensionMismatch(f"描述子维度不一致: {query.shape[1]} vs {train.shape[1]}")
    # 只有一个候选时没有次近距离
    if len(train) < 2:
        return []

    nearest = _two_nearest(query, train)
    matches = []
    for qi in range(len(query)):
        a, b = nearest[qi]
        da = float(np.linalg.norm(query[qi] - train[a]))
        db = float(np.linalg.norm(query[qi] - train[b]))
        if db < da or (db == da and b < a):
            a, b, da, db = b, a, db, da
        if db == 0.0:
            continue
        ratio = da / db
        if ratio < ratio_threshold:
            matches.append(Match(qi, int(a), da, ratio))
    return matches
