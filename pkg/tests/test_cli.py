"""命令行端到端测试：desk 场景走完整条流水线"""

import json
import os

import numpy as np
import pytest

from geometry.camera import angular_error
from scripts.gaze3d import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from utils.file_formats import read_json, read_jsonl

pytestmark = pytest.mark.slow

DESK_SCENE = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
                          'config', 'scenes', 'desk_scene.json')


def _config(directory, workers):
    path = os.path.join(str(directory), f'config_{workers}.json')
    with open(path, 'w', encoding='utf-8') as f:
        json.dump({'settings': {'workers': workers, 'log_level': 'INFO'}}, f)
    return path


def _read_bytes(path):
    with open(path, 'rb') as f:
        return f.read()


def _closest_cyclic(polygon, reference):
    """reference 的循环移位中与 polygon 角点最接近的一个"""
    shifts = [np.roll(reference, -k, axis=0) for k in range(len(reference))]
    return min(shifts, key=lambda s: float(((s - polygon) ** 2).sum()))


@pytest.fixture(scope='module')
def pipeline(tmp_path_factory):
    """simulate -> map-build -> gaze-recover -> roi-annotate -> analyze -> evaluate"""
    root = tmp_path_factory.mktemp('cli')
    with open(DESK_SCENE, 'r', encoding='utf-8') as f:
        document = json.load(f)
    spec_path = root / 'scene.json'
    spec_path.write_text(json.dumps(document), encoding='utf-8')

    config = _config(root, 1)
    paths = {
        'root': root,
        'config': config,
        'spec': str(spec_path),
        'session': str(root / 'session'),
        'map': str(root / 'out' / 'map.json'),
        'grid': str(root / 'out' / 'grid.g3dg'),
        'gaze3d': str(root / 'out' / 'gaze3d.jsonl'),
        'rois': str(root / 'out' / 'rois.json'),
        'analysis': str(root / 'analysis'),
        'metrics': str(root / 'out' / 'metrics.json'),
    }
    commands = [
        ['simulate', '--spec', paths['spec'], '--out', paths['session']],
        ['map-build', '--session', paths['session'], '--map', paths['map'], '--grid', paths['grid']],
        ['gaze-recover', '--map', paths['map'], '--grid', paths['grid'], '--session', paths['session'],
         '--out', paths['gaze3d']],
        ['roi-annotate', '--map', paths['map'], '--grid', paths['grid'], '--session', paths['session'],
         '--out', paths['rois']],
        ['analyze', '--gaze3d', paths['gaze3d'], '--rois', paths['rois'], '--grid', paths['grid'],
         '--out-dir', paths['analysis']],
        ['evaluate', '--gaze3d', paths['gaze3d'], '--truth', os.path.join(paths['session'], 'truth.jsonl'),
         '--out', paths['metrics']],
    ]
    for command in commands:
        assert main(['--quiet', '--config', config] + command) == EXIT_OK, command[0]
    return paths


class TestPipeline:
    def test_session_layout(self, pipeline):
        manifest = read_json(os.path.join(pipeline['session'], 'manifest.json'))
        assert manifest['format'] == 'gaze3d-session'
        assert len(manifest['rgbd_frames']) == 40
        assert len(manifest['scene_frames']) == 60
        assert os.path.exists(os.path.join(pipeline['session'], 'references', 'manifest.json'))
        assert len(read_jsonl(os.path.join(pipeline['session'], 'gaze.jsonl'))) == 60

    def test_map_outputs(self, pipeline):
        summary = read_json(os.path.join(os.path.dirname(pipeline['map']), 'map_summary.json'))
        assert summary['tracked_frames'] == 40
        assert summary['landmarks'] > 100
        assert summary['occupied_voxels'] > 0
        assert 0 < summary['keyframe_fraction'] <= 1

    def test_gaze_outputs(self, pipeline):
        out = os.path.dirname(pipeline['gaze3d'])
        records = read_jsonl(pipeline['gaze3d'])
        assert len(records) == 60
        assert [r['t_ms'] for r in records] == sorted(r['t_ms'] for r in records)
        assert len(read_jsonl(os.path.join(out, 'frames.jsonl'))) == 60
        assert os.path.exists(os.path.join(out, 'trajectory.jsonl'))

    def test_rois_found(self, pipeline):
        labels = {r['roi_label'] for r in read_json(pipeline['rois'])['rois']}
        assert labels == {'logo_a', 'logo_b', 'package'}

    def test_rois_match_planted_targets(self, pipeline):
        truth = read_json(os.path.join(pipeline['session'], 'truth_scene.json'))['roi_polygons']
        rois = read_json(pipeline['rois'])['rois']
        assert len(rois) == len(truth)
        voxel_diagonal = 0.02 * np.sqrt(3.0)
        for roi in rois:
            expected = np.asarray(truth[roi['roi_label']])
            polygon = np.asarray(roi['polygon'])
            assert np.linalg.norm(polygon.mean(axis=0) - expected.mean(axis=0)) < 2 * voxel_diagonal
            assert np.max(np.linalg.norm(polygon - _closest_cyclic(polygon, expected), axis=1)) < 0.05
            # 平面目标都朝向 -z（相机一侧）
            assert angular_error(roi['normal'], [0.0, 0.0, -1.0]) < 5.0

    def test_package_receives_attention(self, pipeline):
        report = read_json(os.path.join(pipeline['analysis'], 'report.json'))
        by_label = {r['roi_label']: r for r in report['rois']}
        assert set(by_label) == {'logo_a', 'logo_b', 'package'}
        for label in ('logo_a', 'logo_b', 'package'):
            assert by_label[label]['aoi_hit_count'] >= 5
            assert by_label[label]['total_dwell_ms'] >= 100
            assert by_label[label]['fixation_count'] >= 1

    def test_analysis_outputs(self, pipeline):
        report = read_json(os.path.join(pipeline['analysis'], 'report.json'))
        assert report['totals']['samples'] == 60
        assert report['totals']['frames'] == 60
        with open(os.path.join(pipeline['analysis'], 'report.csv'), encoding='utf-8') as f:
            header = f.readline().strip().split(',')
        assert header[0] == 'roi_label'
        assert os.path.exists(os.path.join(pipeline['analysis'], 'dwells.jsonl'))
        assert os.path.exists(os.path.join(pipeline['analysis'], 'saliency.g3dg'))

    def test_accuracy(self, pipeline):
        metrics = read_json(pipeline['metrics'])
        assert metrics['samples'] == 60
        assert metrics['localized_pct'] == 100.0
        assert metrics['hit_pct'] >= 99.0
        assert metrics['median_angular_error_deg'] <= 0.6
        assert metrics['median_3d_error_m'] <= 0.015

    def test_simulate_is_byte_stable(self, pipeline, tmp_path):
        again = str(tmp_path / 'session')
        assert main(['--quiet', '--config', pipeline['config'], 'simulate', '--spec', pipeline['spec'],
                     '--out', again]) == EXIT_OK
        for name in ('manifest.json', 'gaze.jsonl', 'truth.jsonl', 'rgbd/features_00003.json'):
            assert _read_bytes(os.path.join(again, name)) == _read_bytes(os.path.join(pipeline['session'], name))

    def test_gaze_recover_independent_of_workers(self, pipeline, tmp_path):
        out = str(tmp_path / 'gaze3d.jsonl')
        assert main(['--quiet', '--config', _config(tmp_path, 4), 'gaze-recover', '--map', pipeline['map'],
                     '--grid', pipeline['grid'], '--session', pipeline['session'], '--out', out]) == EXIT_OK
        assert _read_bytes(out) == _read_bytes(pipeline['gaze3d'])

    def test_analyze_without_rois(self, pipeline, tmp_path):
        out_dir = str(tmp_path / 'analysis')
        assert main(['--quiet', '--config', pipeline['config'], 'analyze', '--gaze3d', pipeline['gaze3d'],
                     '--out-dir', out_dir]) == EXIT_OK
        assert read_json(os.path.join(out_dir, 'report.json'))['rois'] == []


class TestExitCodes:
    def test_missing_subcommand(self):
        with pytest.raises(SystemExit) as excinfo:
            main([])
        assert excinfo.value.code == EXIT_USAGE

    def test_unknown_option(self):
        with pytest.raises(SystemExit) as excinfo:
            main(['evaluate', '--bogus'])
        assert excinfo.value.code == EXIT_USAGE

    def test_missing_config(self, tmp_path):
        code = main(['--config', str(tmp_path / 'nope.json'), 'evaluate', '--gaze3d', 'a', '--truth', 'b',
                     '--out', 'c'])
        assert code == EXIT_USAGE

    def test_missing_session(self, tmp_path):
        code = main(['--quiet', '--config', _config(tmp_path, 1), 'map-build', '--session', str(tmp_path / 'none'),
                     '--map', str(tmp_path / 'm.json'), '--grid', str(tmp_path / 'g.g3dg')])
        assert code == EXIT_DATA
        assert not os.path.exists(tmp_path / 'm.json')

    def test_invalid_scene_spec(self, tmp_path):
        spec = tmp_path / 'bad.json'
        spec.write_text(json.dumps({'scene': {}}), encoding='utf-8')
        code = main(['--quiet', '--config', _config(tmp_path, 1), 'simulate', '--spec', str(spec),
                     '--out', str(tmp_path / 'session')])
        assert code == EXIT_DATA

    def test_corrupt_grid_leaves_no_output(self, pipeline, tmp_path):
        grid = tmp_path / 'grid.g3dg'
        data = bytearray(_read_bytes(pipeline['grid']))
        data[60] ^= 0xFF
        grid.write_bytes(bytes(data))
        out = tmp_path / 'gaze3d.jsonl'
        code = main(['--quiet', '--config', pipeline['config'], 'gaze-recover', '--map', pipeline['map'],
                     '--grid', str(grid), '--session', pipeline['session'], '--out', str(out)])
        assert code == EXIT_DATA
        assert not out.exists()

    def test_corrupt_map_leaves_no_output(self, pipeline, tmp_path):
        bad_map = tmp_path / 'map.json'
        bad_map.write_text(_read_bytes(pipeline['map']).decode('utf-8').replace('"d":32', '"d":33', 1),
                           encoding='utf-8')
        out = tmp_path / 'gaze3d.jsonl'
        code = main(['--quiet', '--config', pipeline['config'], 'gaze-recover', '--map', str(bad_map),
                     '--grid', pipeline['grid'], '--session', pipeline['session'], '--out', str(out)])
        assert code == EXIT_DATA
        assert not out.exists()
        assert not (tmp_path / 'frames.jsonl').exists()

    def test_failed_trajectory_write_leaves_no_gaze_outputs(self, pipeline, tmp_path, monkeypatch):
        import utils.pipeline_runner as runner

        def broken(*args, **kwargs):
            raise OSError('磁盘已满')

        monkeypatch.setattr(runner, 'write_trajectory', broken)
        out = tmp_path / 'gaze3d.jsonl'
        code = main(['--quiet', '--config', pipeline['config'], 'gaze-recover', '--map', pipeline['map'],
                     '--grid', pipeline['grid'], '--session', pipeline['session'], '--out', str(out)])
        assert code == EXIT_DATA
        assert os.listdir(tmp_path) == []

    def test_truth_length_mismatch(self, pipeline, tmp_path):
        truth = tmp_path / 'truth.jsonl'
        lines = _read_bytes(os.path.join(pipeline['session'], 'truth.jsonl')).splitlines(keepends=True)
        truth.write_bytes(b''.join(lines[:10]))
        code = main(['--quiet', '--config', pipeline['config'], 'evaluate', '--gaze3d', pipeline['gaze3d'],
                     '--truth', str(truth), '--out', str(tmp_path / 'metrics.json')])
        assert code == EXIT_DATA

    def test_quiet_prints_nothing(self, pipeline, tmp_path, capsys):
        main(['--quiet', '--config', pipeline['config'], 'evaluate', '--gaze3d', pipeline['gaze3d'],
              '--truth', os.path.join(pipeline['session'], 'truth.jsonl'), '--out', str(tmp_path / 'm.json')])
        assert capsys.readouterr().out == ''


def _corridor_document():
    """沿 4 m 长墙平移 40 帧的走廊场景"""
    with open(DESK_SCENE, 'r', encoding='utf-8') as f:
        document = json.load(f)
    document['scene']['bounds'] = {'min': [-1.6, -1.1, -0.1], 'max': [5.6, 1.1, 2.1]}
    document['scene']['patches'] = [
        {'corner': [-1.5, -1.0, 2.0], 'edge_u': [7.0, 0.0, 0.0], 'edge_v': [0.0, 2.0, 0.0], 'density': 60},
        {'corner': [0.2, -0.3, 1.98], 'edge_u': [0.3, 0.0, 0.0], 'edge_v': [0.0, 0.2, 0.0], 'density': 400,
         'roi_label': 'poster'},
    ]
    document['mapping_trajectory'] = {
        'frame_count': 40,
        'frame_rate': 15,
        'waypoints': [
            {'position': [0.0, 0.0, 0.0], 'look_at': [0.0, 0.0, 2.0]},
            {'position': [4.0, 0.0, 0.0], 'look_at': [4.0, 0.0, 2.0]},
        ],
    }
    document['gaze_trajectory'] = {
        'frame_count': 5,
        'frame_rate': 30,
        'waypoints': [
            {'position': [0.0, 0.0, 0.0], 'look_at': [0.0, 0.0, 2.0]},
            {'position': [0.1, 0.0, 0.0], 'look_at': [0.1, 0.0, 2.0]},
        ],
    }
    document['gaze_script'] = [{'start_ms': 0, 'end_ms': 150, 'target': [0.0, 0.0, 2.0]}]
    document['grid_resolution'] = 0.05
    document['depth_stride_px'] = 40
    return document


def test_corridor_keyframe_fraction(tmp_path):
    spec = tmp_path / 'corridor.json'
    spec.write_text(json.dumps(_corridor_document()), encoding='utf-8')
    config = _config(tmp_path, 1)
    session = str(tmp_path / 'session')
    out = tmp_path / 'out'
    assert main(['--quiet', '--config', config, 'simulate', '--spec', str(spec), '--out', session]) == EXIT_OK
    assert main(['--quiet', '--config', config, 'map-build', '--session', session,
                 '--map', str(out / 'map.json'), '--grid', str(out / 'grid.g3dg')]) == EXIT_OK
    summary = read_json(str(out / 'map_summary.json'))
    assert summary['tracked_frames'] == 40
    assert summary['landmarks'] > 0
    assert 0.1 <= summary['keyframe_fraction'] <= 0.6
