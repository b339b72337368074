"""文件格式测试：规范化 JSON、JSON Lines、CRC32 与体素编码"""

import json
import math
import os

import numpy as np
import pytest

from utils.exceptions import ChecksumError, FormatError
from utils.file_formats import (
    canonical_json,
    crc32_hex,
    decode_voxel_file,
    encode_voxel_file,
    read_json,
    read_jsonl,
    read_voxel_file,
    require_fields,
    staged_outputs,
    verify_checksum,
    with_checksum,
    write_json,
    write_jsonl,
    write_voxel_file,
)


class TestCanonicalJson:
    def test_compact_and_ordered(self):
        assert canonical_json({'b': 1, 'a': [1.5, 2]}) == '{"b":1,"a":[1.5,2]}'

    def test_numpy_values(self):
        doc = {'v': np.array([0.1, 2.0]), 'i': np.int64(3), 'ok': np.bool_(True)}
        assert canonical_json(doc) == '{"v":[0.1,2.0],"i":3,"ok":true}'

    def test_shortest_round_trip_floats(self):
        x = 0.1 + 0.2
        assert json.loads(canonical_json([x]))[0] == x

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            canonical_json({'x': math.nan})


class TestChecksum:
    def test_known_crc(self):
        assert crc32_hex('123456789') == 'cbf43926'

    def test_verify(self):
        doc = with_checksum({'a': 1, 'b': [1, 2]})
        assert list(doc)[-1] == 'crc32'
        assert verify_checksum(doc) == {'a': 1, 'b': [1, 2]}

    def test_tampered(self):
        doc = with_checksum({'a': 1})
        doc['a'] = 2
        with pytest.raises(ChecksumError):
            verify_checksum(doc, 'map.json')

    def test_missing_field(self):
        with pytest.raises(FormatError):
            verify_checksum({'a': 1})


class TestJsonFiles:
    def test_write_read(self, tmp_path):
        path = tmp_path / 'sub' / 'x.json'
        write_json(str(path), {'a': np.float64(1.25)}, indent=2)
        assert read_json(str(path)) == {'a': 1.25}

    def test_parse_error_has_line(self, tmp_path):
        path = tmp_path / 'bad.json'
        path.write_text('{\n  "a": 1,\n  oops\n}\n', encoding='utf-8')
        with pytest.raises(FormatError) as excinfo:
            read_json(str(path))
        assert excinfo.value.line == 3
        assert f"{path}:3" in str(excinfo.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FormatError):
            read_json(str(tmp_path / 'none.json'))

    def test_jsonl(self, tmp_path):
        path = str(tmp_path / 'r.jsonl')
        write_jsonl(path, [{'t_ms': 0}, {'t_ms': 33}])
        with open(path, encoding='utf-8') as f:
            assert f.read() == '{"t_ms":0}\n{"t_ms":33}\n'
        assert read_jsonl(path) == [{'t_ms': 0}, {'t_ms': 33}]

    def test_jsonl_error_line_number(self, tmp_path):
        path = tmp_path / 'r.jsonl'
        path.write_text('{"a":1}\n\n{"a":2}\n{"a":\n', encoding='utf-8')
        with pytest.raises(FormatError) as excinfo:
            read_jsonl(str(path))
        assert excinfo.value.line == 4

    def test_require_fields(self):
        require_fields({'a': 1, 'b': 2}, ['a', 'b'])
        with pytest.raises(FormatError, match='b'):
            require_fields({'a': 1}, ['a', 'b'], path='f.jsonl', line=7)

    def test_staged_outputs_commit_together(self, tmp_path):
        a, b = str(tmp_path / 'a.jsonl'), str(tmp_path / 'out' / 'b.json')
        with staged_outputs([a, b]) as staged:
            write_jsonl(staged[a], [{'k': 1}])
            write_json(staged[b], {'k': 2})
            assert not os.path.exists(a) and not os.path.exists(b)
        assert read_jsonl(a) == [{'k': 1}]
        assert read_json(b) == {'k': 2}
        assert sorted(os.listdir(tmp_path)) == ['a.jsonl', 'out']

    def test_staged_outputs_failure_keeps_previous_files(self, tmp_path):
        a, b = str(tmp_path / 'a.jsonl'), str(tmp_path / 'b.jsonl')
        write_jsonl(a, [{'old': True}])
        with pytest.raises(RuntimeError):
            with staged_outputs([a, b]) as staged:
                write_jsonl(staged[a], [{'old': False}])
                raise RuntimeError('写到一半失败')
        assert read_jsonl(a) == [{'old': True}]
        assert not os.path.exists(b)
        assert os.listdir(tmp_path) == ['a.jsonl']


class TestVoxelCodec:
    def test_round_trip(self, tmp_path):
        values = np.arange(24, dtype=float).reshape(2, 3, 4) * 0.5
        path = str(tmp_path / 'g.g3dg')
        write_voxel_file(path, (-1.0, -2.0, 0.5), 0.05, (2, 3, 4), values)
        origin, resolution, dims, decoded = read_voxel_file(path)
        assert origin == (-1.0, -2.0, 0.5)
        assert resolution == 0.05
        assert dims == (2, 3, 4)
        np.testing.assert_array_equal(decoded, values)

    def test_x_fastest_layout(self):
        values = np.zeros((2, 2, 1))
        values[1, 0, 0] = 7.0
        data = encode_voxel_file((0, 0, 0), 1.0, (2, 2, 1), values)
        body = np.frombuffer(data[52:-4], dtype='<f4')
        assert body.tolist() == [0.0, 7.0, 0.0, 0.0]

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            encode_voxel_file((0, 0, 0), 1.0, (2, 2, 2), np.zeros((2, 2)))

    @pytest.mark.parametrize('corrupt, error', [
        (lambda d: b'XXXX' + d[4:], FormatError),
        (lambda d: d[:-8], FormatError),
        (lambda d: d[:20], FormatError),
        (lambda d: d[:56] + bytes([d[56] ^ 0xFF]) + d[57:], ChecksumError),
    ])
    def test_corruption(self, corrupt, error):
        data = encode_voxel_file((0, 0, 0), 0.1, (2, 2, 2), np.ones((2, 2, 2)))
        with pytest.raises(error):
            decode_voxel_file(corrupt(data), 'g.g3dg')

    def test_version(self):
        data = bytearray(encode_voxel_file((0, 0, 0), 0.1, (1, 1, 1), np.ones((1, 1, 1))))
        data[4] = 9
        with pytest.raises(FormatError, match='版本'):
            decode_voxel_file(bytes(data))
