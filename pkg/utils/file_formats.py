#!/usr/bin/env python3
"""
文件格式工具
规范化 JSON、JSON Lines、CRC32 校验与原子写入
"""

import json
import logging
import os
import struct
import tempfile
import zlib
from contextlib import contextmanager

import numpy as np

from utils.exceptions import ChecksumError, FormatError

logger = logging.getLogger(__name__)


def to_plain(obj):
    """numpy 类型 -> 内置类型，便于 JSON 序列化"""
    if isinstance(obj, dict):
        return {k: to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def canonical_json(obj):
    """紧凑 JSON，保持键的插入顺序，浮点数用最短往返表示"""
    return json.dumps(to_plain(obj), separators=(',', ':'), ensure_ascii=False, allow_nan=False)


def crc32_hex(data):
    if isinstance(data, str):
        data = data.encode('utf-8')
    return f"{zlib.crc32(data) & 0xFFFFFFFF:08x}"


def atomic_write_bytes(path, data):
    """先写临时文件再 os.replace，出错时不留下部分输出"""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(prefix='.tmp-', dir=directory)
    try:
        with os.fdopen(fd, 'wb') as f:
            f.write(data)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def atomic_write_text(path, text):
    atomic_write_bytes(path, text.encode('utf-8'))


@contextmanager
def staged_outputs(paths):
    """
    一组输出一起提交

    块内写到各目标同目录下的临时路径（yield 目标 -> 临时路径的字典），
    块正常结束后才逐个 os.replace；出错时删除临时文件，已有目标保持不变
    """
    staged = {}
    try:
        for path in paths:
            directory = os.path.dirname(os.path.abspath(path))
            os.makedirs(directory, exist_ok=True)
            fd, tmp_path = tempfile.mkstemp(prefix='.tmp-', dir=directory)
            os.close(fd)
            staged[path] = tmp_path
        yield staged
        for path, tmp_path in staged.items():
            os.replace(tmp_path, path)
    finally:
        for tmp_path in staged.values():
            if os.path.exists(tmp_path):
                os.unlink(tmp_path)


def write_json(path, obj, indent=None):
    """写 JSON 文件（UTF-8，不允许 NaN/Inf）"""
    if indent is None:
        text = canonical_json(obj)
    else:
        text = json.dumps(to_plain(obj), indent=indent, ensure_ascii=False, allow_nan=False)
    atomic_write_text(path, text + '\n')


def _parse_json(text, path, line_offset=0):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"JSON 解析失败 (列 {e.colno}): {e.msg}", path=path, line=e.lineno + line_offset)


def read_json(path):
    """读取 JSON 文件，解析错误带路径与行号"""
    if not os.path.exists(path):
        raise FormatError("文件不存在", path=path)
    with open(path, 'r', encoding='utf-8') as f:
        return _parse_json(f.read(), path)


def write_jsonl(path, records):
    lines = [canonical_json(r) for r in records]
    atomic_write_text(path, ''.join(line + '\n' for line in lines))


def read_jsonl(path):
    """读取 JSON Lines，空行跳过"""
    if not os.path.exists(path):
        raise FormatError("文件不存在", path=path)
    records = []
    with open(path, 'r', encoding='utf-8') as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            records.append(_parse_json(line.strip(), path, line_offset=lineno - 1))
    return records


def with_checksum(payload):
    """payload 末尾追加 crc32 字段（覆盖 payload 的规范化序列化）"""
    result = dict(payload)
    result['crc32'] = crc32_hex(canonical_json(payload))
    return result


def verify_checksum(document, path=None):
    """校验并去掉 crc32 字段"""
    if not isinstance(document, dict) or 'crc32' not in document:
        raise FormatError("缺少 crc32 字段", path=path)
    payload = {k: v for k, v in document.items() if k != 'crc32'}
    expected = crc32_hex(canonical_json(payload))
    if document['crc32'] != expected:
        raise ChecksumError(f"CRC32 校验失败: 文件 {document['crc32']}，计算 {expected}", path=path)
    return payload


def require_fields(record, fields, path=None, line=None):
    """检查必需字段"""
    if not isinstance(record, dict):
        raise FormatError("记录必须是 JSON 对象", path=path, line=line)
    missing = [f for f in fields if f not in record]
    if missing:
        raise FormatError(f"缺少字段: {', '.join(missing)}", path=path, line=line)


VOXEL_MAGIC = b'G3DG'
VOXEL_VERSION = 1
_VOXEL_HEADER = struct.Struct('<4sI3dd3I')
_CRC = struct.Struct('<I')


def encode_voxel_file(origin, resolution, dims, values):
    """
    体素二进制格式（小端）：magic, 版本, 原点, 分辨率, 尺寸, f32 值（x 最快）, CRC32

    Args:
        values: 形状 dims 的数组
    """
    values = np.asarray(values)
    if values.shape != tuple(dims):
        raise ValueError(f"数值形状 {values.shape} 与尺寸 {tuple(dims)} 不一致")
    header = _VOXEL_HEADER.pack(VOXEL_MAGIC, VOXEL_VERSION, *[float(x) for x in origin],
                                float(resolution), *[int(n) for n in dims])
    body = values.ravel(order='F').astype('<f4').tobytes()
    data = header + body
    return data + _CRC.pack(zlib.crc32(data) & 0xFFFFFFFF)


def decode_voxel_file(data, path=None):
    """
    解析体素文件

    Returns:
        (origin, resolution, dims, values float64 形状 dims)
    """
    if len(data) < _VOXEL_HEADER.size + _CRC.size:
        raise FormatError("文件过短", path=path)
    magic, version, ox, oy, oz, resolution, nx, ny, nz = _VOXEL_HEADER.unpack_from(data, 0)
    if magic != VOXEL_MAGIC:
        raise FormatError(f"魔数错误: {magic!r}", path=path)
    if version != VOXEL_VERSION:
        raise FormatError(f"不支持的版本: {version}", path=path)
    count = nx * ny * nz
    expected = _VOXEL_HEADER.size + 4 * count + _CRC.size
    if len(data) != expected:
        raise FormatError(f"文件长度 {len(data)} 与尺寸不符（应为 {expected}）", path=path)
    (stored,) = _CRC.unpack_from(data, len(data) - _CRC.size)
    computed = zlib.crc32(data[:-_CRC.size]) & 0xFFFFFFFF
    if stored != computed:
        raise ChecksumError(f"CRC32 校验失败: 文件 {stored:08x}，计算 {computed:08x}", path=path)
    values = np.frombuffer(data, dtype='<f4', count=count, offset=_VOXEL_HEADER.size)
    values = values.astype(np.float64).reshape((nx, ny, nz), order='F')
    return (ox, oy, oz), resolution, (nx, ny, nz), values


def write_voxel_file(path, origin, resolution, dims, values):
    atomic_write_bytes(path, encode_voxel_file(origin, resolution, dims, values))


def read_voxel_file(path):
    if not os.path.exists(path):
        raise FormatError("文件不存在", path=path)
    with open(path, 'rb') as f:
        return decode_voxel_file(f.read(), path)
