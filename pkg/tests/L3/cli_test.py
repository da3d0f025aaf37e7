import json
import logging
import sys

import pytest
from click.testing import CliRunner

from revdiam.cli import revdiam_cli
from revdiam.digraph import Digraph
from tests.generators import directed_cycle

logging.basicConfig(stream=sys.stderr,
                    level=(logging.DEBUG),
                    format='%(asctime)s %(levelname)s %(threadName)s [%(name)s] %(message)s')


@pytest.fixture()
def runner():
    return CliRunner(mix_stderr=False)


@pytest.fixture()
def workdir(tmp_path):
    return str(tmp_path)


def invoke(runner, args, expected_exit, **kwargs):
    result = runner.invoke(revdiam_cli, args, **kwargs)
    assert result.exit_code == expected_exit, (result.stdout, result.stderr, result.exception)
    return result


def report(result):
    return json.loads(result.stdout)


@pytest.fixture()
def partition_file(runner, workdir):
    invoke(runner, ['generate', 'partition', '--values', '1,1', '--out-dir', workdir, '--name', 'p11'], 0)
    return f"{workdir}/p11.json"


@pytest.fixture()
def triangle_file(workdir):
    file_name = f"{workdir}/triangle.json"
    Digraph.from_edges(3, directed_cycle([0, 1, 2])).save_to_json_file(file_name)
    return file_name


@pytest.fixture()
def transitive_file(workdir):
    file_name = f"{workdir}/transitive.json"
    Digraph.from_edges(3, [(0, 1), (1, 2), (0, 2)]).save_to_json_file(file_name)
    return file_name


def test_generate_partition(runner, workdir):
    result = invoke(runner, ['generate', 'partition', '--values', '3,1,2', '--out-dir', workdir], 0)
    body = report(result)
    assert body['outcome'] == 'Done'
    assert body['details']['d'] == 6 and body['details']['k'] == 6
    assert body['details']['files'] == [f"{workdir}/partition.json", f"{workdir}/partition.map.json",
                                        f"{workdir}/partition.dot"]
    assert body['instance'] == {'n': 4, 'm': 6, 'total_weight': 12}


def test_odd_partition_is_an_error(runner, workdir):
    body = report(invoke(runner, ['generate', 'partition', '--values', '1', '--out-dir', workdir], 2))
    assert body['outcome'] == 'Error'
    assert body['error'].startswith('OddSumError')


def test_generation_is_deterministic(runner, tmp_path):
    first, second = tmp_path / 'a', tmp_path / 'b'
    first.mkdir()
    second.mkdir()
    for out in (first, second):
        invoke(runner, ['generate', 'ds', '--n', '3', '--edges', '0-1,1-2', '--ell', '1', '--out-dir',
                        str(out)], 0)
    for suffix in ('json', 'map.json', 'dot'):
        assert (first / f"ds.{suffix}").read_bytes() == (second / f"ds.{suffix}").read_bytes()


def test_bad_edge_list(runner, workdir):
    body = report(invoke(runner, ['generate', 'ds', '--n', '3', '--edges', '0-1-2', '--ell', '1', '--out-dir',
                                  workdir], 2))
    assert 'i-j' in body['error']


def test_solve_partition(runner, partition_file):
    body = report(invoke(runner, ['solve', partition_file, '--d', '3', '--k', '3', '--mode', 'weight'], 0))
    assert body['outcome'] == 'Feasible'
    assert body['cost'] == 3
    assert body['achieved_diameter'] == 3
    assert body['details']['solver'] == 'cactus'

    body = report(invoke(runner, ['solve', partition_file, '--d', '3', '--k', '2', '--mode', 'weight'], 1))
    assert body['outcome'] == 'Infeasible'
    assert body['witness'] is None


def test_solvers_agree(runner, transitive_file):
    witnesses = set()
    for algo in ('auto', 'brute', 'cactus', 'oracle'):
        body = report(invoke(runner, ['solve', transitive_file, '--d', '2', '--k', '1', '--algo', algo], 0))
        witnesses.add(tuple(body['witness']))
    assert witnesses == {(2, )}
    body = report(invoke(runner, ['solve', transitive_file, '--d', '2', '--k', '0', '--algo', 'oracle'], 1))
    assert 'budget is 0' in body['details']['reason']


def test_solve_errors(runner, transitive_file, workdir):
    body = report(invoke(runner, ['solve', transitive_file, '--d', '1', '--k', '1'], 2))
    assert body['error'].startswith('TargetDiameterError')

    body = report(invoke(runner, ['solve', f"{workdir}/missing.json", '--d', '2', '--k', '1'], 2))
    assert body['outcome'] == 'Error'

    invoke(runner, ['solve', transitive_file, '--d', '2', '--k', '1', '--algo', 'oracle'],
           2,
           env={'REVDIAM_ORACLE_CAP': '2'})


def test_verify(runner, partition_file, workdir):
    good = f"{workdir}/good.json"
    with open(good, "w", encoding="utf-8") as f:
        json.dump([2, 1], f)
    body = report(invoke(runner, ['verify', partition_file, good, '--d', '3', '--k', '3', '--mode', 'weight'], 0))
    assert body['witness'] == [1, 2]
    assert body['achieved_diameter'] == 3
    assert body['cost'] == 3

    bad = f"{workdir}/bad.json"
    with open(bad, "w", encoding="utf-8") as f:
        json.dump({'arc_ids': [1]}, f)
    body = report(invoke(runner, ['verify', partition_file, bad, '--d', '3'], 1))
    assert body['achieved_diameter'] == 'inf'
    assert body['details']['witness'] == [1]

    outside = f"{workdir}/outside.json"
    with open(outside, "w", encoding="utf-8") as f:
        json.dump([9], f)
    body = report(invoke(runner, ['verify', partition_file, outside, '--d', '3'], 2))
    assert body['error'].startswith('IndexError')


def test_volume(runner, triangle_file, transitive_file, workdir):
    body = report(invoke(runner, ['volume', triangle_file], 0))
    assert body['details']['volume'] == '3'
    assert body['details']['method'] == 'ehrhart'
    assert report(invoke(runner, ['volume', triangle_file, '--method', 'cactus'], 0))['details']['volume'] == '3'
    assert report(invoke(runner, ['volume', triangle_file, '--method', 'lp'], 0))['details']['volume'] == '3'
    assert report(invoke(runner, ['volume', transitive_file, '--method', 'cactus'], 2))['outcome'] == 'Error'

    cache_file = f"{workdir}/volumes.json"
    invoke(runner, ['volume', triangle_file, '--cache-file', cache_file], 0)
    with open(cache_file, encoding="utf-8") as f:
        assert list(json.load(f)) == ['3:0>1;1>2;2>0']


def test_volume_falls_back_to_cactus_product(runner, workdir):
    invoke(runner, ['generate', 'counterexample', '--i', '8', '--out-dir', workdir], 0)
    body = report(invoke(runner, ['volume', f"{workdir}/counterexample_g.json"], 0))
    assert body['details']['method'] == 'cactus'
    assert body['details']['volume'] == '81'
    invoke(runner, ['volume', f"{workdir}/counterexample_g.json", '--method', 'ehrhart'], 2)


def test_counterexample_summary(runner, workdir):
    body = report(invoke(runner, ['generate', 'counterexample', '--i', '9', '--out-dir', workdir], 0))
    graphs = body['details']['graphs']
    assert graphs['g']['diameter'] == 9
    assert graphs['h']['diameter'] < 9
    assert graphs['g']['volume'] == graphs['h']['volume'] == '108'
    invoke(runner, ['generate', 'counterexample', '--i', '7', '--out-dir', workdir], 2)


def test_volume_sweep(runner, triangle_file, workdir):
    result = invoke(runner, ['volume', triangle_file, '--sweep'], 0)
    lines = result.stdout.splitlines()
    assert lines[0] == 'orientation,diameter,volume_numerator,volume_denominator'
    assert len(lines) == 9

    output = f"{workdir}/sweep.csv"
    body = report(invoke(runner, ['volume', triangle_file, '--sweep', '--output', output], 0))
    assert body['details']['csv'] == output
    with open(output, encoding="utf-8") as f:
        assert f.read() == result.stdout


def test_reproduce_bundled_recipe(runner, workdir):
    result = invoke(runner, ['reproduce', '--workdir', workdir], 0)
    assert '"failed": []' in result.stdout


def test_reproduce_reports_mismatches(runner, workdir):
    recipe = f"{workdir}/recipe.yaml"
    with open(recipe, "w", encoding="utf-8") as f:
        f.write("steps:\n"
                "  - name: partition instance\n"
                "    args: [generate, partition, --values, '1,1', --out-dir, '{workdir}']\n"
                "  - name: wrong expectation\n"
                "    args: [solve, '{workdir}/partition.json', --d, '3', --k, '3', --mode, weight]\n"
                "    expect_exit: 1\n"
                "  - name: unknown option\n"
                "    args: [solve, --colour]\n"
                "    expect_exit: 2\n")
    result = invoke(runner, ['reproduce', recipe, '--workdir', workdir], 2)
    assert '"wrong expectation"' in result.stdout
    assert '"outcome": "Error"' in result.stdout
    assert '"error": "RecipeMismatch: wrong expectation"' in result.stdout


def test_help(runner):
    result = invoke(runner, ['--help'], 0)
    for command in ('solve', 'verify', 'generate', 'volume', 'reproduce'):
        assert command in result.stdout
