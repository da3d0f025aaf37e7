import json
import logging
import os
import pathlib
import sys
import time
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Union

import click
import coloredlogs
import fsspec
import yaml
from pydantic import BaseModel, model_validator

from .cactus import CycleTree, DisconnectedGraphError, cactus_decompose
from .cactus_solver import solve_cactus
from .config import ORACLE_CAP_ENV
from .digraph import CostMode, Digraph, ReversalSet, diameter, load_digraph, reverse_arcs
from .persisted_cache import Cache
from .polytope import (VolumeCapExceeded, build_counterexample_pair, cactus_volume, cached_volume,
                       directed_edge_polytope, normalized_volume, orientation_sweep, sweep_to_csv)
from .reductions import (DominatingSetInstance, PartitionInstance, ReductionInstance, dominating_set_to_kreversals,
                         partition_to_weighted_kreversals)
from .solver import Infeasible, SolveBudget, Solution, TargetDiameterError, oracle_min_reversals, solve_k_reversals

logger = logging.getLogger('revdiam')

BUNDLED_RECIPE = pathlib.Path(__file__).parent / 'recipes' / 'worked_examples.yaml'
HANDLED_ERRORS = (ValueError, IndexError, OSError, RuntimeError)


class Outcome(str, Enum):
    FEASIBLE = 'Feasible'
    INFEASIBLE = 'Infeasible'
    DONE = 'Done'
    ERROR = 'Error'


EXIT_CODES = {Outcome.FEASIBLE: 0, Outcome.DONE: 0, Outcome.INFEASIBLE: 1, Outcome.ERROR: 2}


class InstanceDigest(BaseModel):
    n: int
    m: int
    total_weight: int

    @classmethod
    def of(cls, digraph: Digraph) -> 'InstanceDigest':
        return cls(n=digraph.n, m=digraph.arc_count, total_weight=digraph.total_weight)


class RunReport(BaseModel):
    command: str
    instance: Optional[InstanceDigest] = None
    parameters: Dict[str, Any] = {}
    outcome: Outcome
    witness: Optional[List[int]] = None
    achieved_diameter: Optional[Union[int, str]] = None
    cost: Optional[int] = None
    details: Dict[str, Any] = {}
    error: Optional[str] = None
    wall_time: float = 0.0

    @model_validator(mode='after')
    def _witness_iff_feasible(self) -> 'RunReport':
        if (self.witness is not None) != (self.outcome == Outcome.FEASIBLE):
            raise ValueError(f"witness must be present exactly for Feasible reports, outcome is {self.outcome.value}")
        return self

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.outcome]


def _emit(command: str, parameters: Dict[str, Any], body: Callable[[], Dict[str, Any]]):
    """Run ``body``, print its RunReport as JSON and exit with the outcome's code."""
    started = time.monotonic()
    try:
        fields = body()
    except HANDLED_ERRORS as e:
        logger.error(f"{command} failed: {e}")
        fields = {'outcome': Outcome.ERROR, 'error': f"{type(e).__name__}: {e}"}
    silent = fields.pop('silent', False)
    report = RunReport(command=command, parameters=parameters, wall_time=round(time.monotonic() - started, 6), **fields)
    if not silent:
        click.echo(report.model_dump_json(indent=4))
    click.get_current_context().exit(report.exit_code)


def _result_fields(digraph: Digraph, result: Union[Solution, Infeasible]) -> Dict[str, Any]:
    fields: Dict[str, Any] = {'instance': InstanceDigest.of(digraph)}
    if isinstance(result, Infeasible):
        fields.update(outcome=Outcome.INFEASIBLE, details={'reason': result.reason})
        return fields
    fields.update(outcome=Outcome.FEASIBLE,
                  witness=list(result.witness.arc_ids),
                  achieved_diameter=result.achieved_diameter.to_json(),
                  cost=result.cost)
    return fields


@click.group()
@click.option('--verbose', default=False, is_flag=True, help="debug output from revdiam loggers", show_default=True)
@click.option('--debug', default=False, is_flag=True, help="debug output from every logger", show_default=True)
def revdiam_cli(verbose, debug):
    """Exact solvers, reductions and edge polytope tools for diameter-bounding arc reversals."""
    logging.basicConfig(stream=sys.stderr,
                        level=logging.INFO,
                        format='%(asctime)s %(levelname)s %(threadName)s [%(name)s] %(message)s')

    # colored logs sets all loggers to this level
    coloredlogs.install(level=logging.DEBUG, stream=sys.stderr)
    logging.getLogger().setLevel(logging.DEBUG if debug else logging.INFO)

    if verbose:
        logger.setLevel(logging.DEBUG)


@revdiam_cli.command('solve')
@click.argument('instance_file')
@click.option('--d', 'd', type=int, required=True, help="target diameter (at least 2)")
@click.option('--k', 'k', type=int, required=True, help="reversal budget")
@click.option('--mode',
              type=click.Choice([m.value for m in CostMode]),
              default=CostMode.CARDINALITY.value,
              show_default=True,
              help="count reversed arcs or sum their weights")
@click.option('--algo',
              type=click.Choice(['auto', 'brute', 'cactus', 'oracle']),
              default='auto',
              show_default=True,
              help="auto uses the cactus program when the instance is a bridgeless cactus")
@click.option('--worker-threads', default=1, show_default=True, help="threads for the reversal search")
@click.option('--oracle-cap', type=int, envvar=ORACLE_CAP_ENV, default=None, help="largest arc count the oracle accepts")
def cmd_solve(instance_file, d, k, mode, algo, worker_threads, oracle_cap):
    """Find a cheapest reversal set bringing the diameter down to d."""
    parameters = {'instance_file': instance_file, 'd': d, 'k': k, 'mode': mode, 'algo': algo}

    def body():
        digraph = load_digraph(instance_file)
        budget = SolveBudget(d=d, k=k, mode=CostMode(mode))
        if d < 2:
            raise TargetDiameterError(f"target diameter must be at least 2, got {d}")
        chosen = algo
        if algo == 'auto':
            try:
                chosen = 'cactus' if isinstance(cactus_decompose(digraph), CycleTree) else 'brute'
            except DisconnectedGraphError:
                chosen = 'brute'
        logger.info(f"Solving {instance_file} with the {chosen} solver")
        if chosen == 'cactus':
            result = solve_cactus(digraph, d, k, budget.mode)
        elif chosen == 'brute':
            result = solve_k_reversals(digraph, budget, worker_threads=worker_threads)
        else:
            result = oracle_min_reversals(digraph, d, budget.mode, cap=oracle_cap)
            if isinstance(result, Solution) and result.cost > k:
                result = Infeasible(reason=f"cheapest witness costs {result.cost}, budget is {k}")
        fields = _result_fields(digraph, result)
        fields.setdefault('details', {})['solver'] = chosen
        return fields

    _emit('solve', parameters, body)


def _load_witness(witness_file: str) -> ReversalSet:
    with fsspec.open(witness_file, "r", encoding="utf-8") as f:
        data = json.load(f)
    if isinstance(data, list):
        return ReversalSet.of(data)
    return ReversalSet.model_validate(data)


@revdiam_cli.command('verify')
@click.argument('instance_file')
@click.argument('witness_file')
@click.option('--d', 'd', type=int, required=True, help="target diameter")
@click.option('--k', 'k', type=int, default=None, help="optional reversal budget")
@click.option('--mode',
              type=click.Choice([m.value for m in CostMode]),
              default=CostMode.CARDINALITY.value,
              show_default=True)
def cmd_verify(instance_file, witness_file, d, k, mode):
    """Recompute the diameter and cost a witness achieves."""
    parameters = {'instance_file': instance_file, 'witness_file': witness_file, 'd': d, 'k': k, 'mode': mode}

    def body():
        digraph = load_digraph(instance_file)
        witness = _load_witness(witness_file).validate_against(digraph)
        achieved = diameter(reverse_arcs(digraph, witness))
        cost = witness.cost(digraph, CostMode(mode))
        fields: Dict[str, Any] = {'instance': InstanceDigest.of(digraph)}
        if achieved <= d and (k is None or cost <= k):
            fields.update(outcome=Outcome.FEASIBLE, witness=list(witness.arc_ids))
        else:
            fields.update(outcome=Outcome.INFEASIBLE, details={'witness': list(witness.arc_ids)})
        fields.update(achieved_diameter=achieved.to_json(), cost=cost)
        logger.info(f"Witness {list(witness.arc_ids)} reaches diameter {achieved} at cost {cost}")
        return fields

    _emit('verify', parameters, body)


@revdiam_cli.group('generate')
def cmd_generate():
    """Write generated instances with mapping sidecar and DOT files."""


def _parse_ints(text: str) -> List[int]:
    return [int(x) for x in text.split(',') if x.strip()]


def _parse_edges(text: str) -> List[List[int]]:
    edges = []
    for token in text.split(','):
        token = token.strip()
        if not token:
            continue
        parts = token.split('-')
        if len(parts) != 2:
            raise ValueError(f"edge {token!r} must look like i-j")
        edges.append([int(parts[0]), int(parts[1])])
    return edges


def _generated_fields(instance: ReductionInstance, prefix: str) -> Dict[str, Any]:
    instance.save(prefix)
    return {
        'outcome': Outcome.DONE,
        'instance': InstanceDigest.of(instance.digraph),
        'details': {
            'kind': instance.kind,
            'd': instance.d,
            'k': instance.k,
            'mode': instance.mode.value,
            'files': [f"{prefix}.json", f"{prefix}.map.json", f"{prefix}.dot"]
        }
    }


@cmd_generate.command('ds')
@click.option('--n', 'n', type=int, required=True, help="number of graph vertices")
@click.option('--edges', default='', help="comma separated edges such as 0-1,1-2")
@click.option('--ell', type=int, required=True, help="dominating set size bound")
@click.option('--out-dir', default='.', show_default=True)
@click.option('--name', default='ds', show_default=True, help="file name prefix")
def cmd_generate_ds(n, edges, ell, out_dir, name):
    parameters = {'kind': 'ds', 'n': n, 'edges': edges, 'ell': ell}

    def body():
        inst = DominatingSetInstance(n=n, edges=_parse_edges(edges), ell=ell)
        return _generated_fields(dominating_set_to_kreversals(inst), os.path.join(out_dir, name))

    _emit('generate', parameters, body)


@cmd_generate.command('partition')
@click.option('--values', required=True, help="comma separated positive integers")
@click.option('--out-dir', default='.', show_default=True)
@click.option('--name', default='partition', show_default=True, help="file name prefix")
def cmd_generate_partition(values, out_dir, name):
    parameters = {'kind': 'partition', 'values': values}

    def body():
        inst = PartitionInstance(values=_parse_ints(values))
        return _generated_fields(partition_to_weighted_kreversals(inst), os.path.join(out_dir, name))

    _emit('generate', parameters, body)


@cmd_generate.command('counterexample')
@click.option('--i', 'i', type=int, required=True, help="diameter of the first graph (at least 8)")
@click.option('--out-dir', default='.', show_default=True)
@click.option('--name', default='counterexample', show_default=True, help="file name prefix")
def cmd_generate_counterexample(i, out_dir, name):
    parameters = {'kind': 'counterexample', 'i': i}

    def body():
        g, h = build_counterexample_pair(i)
        prefix = os.path.join(out_dir, name)
        files = []
        summary = {}
        for label, digraph in (('g', g), ('h', h)):
            ReductionInstance(kind='counterexample', digraph=digraph, d=i, k=0,
                              mode=CostMode.CARDINALITY).save(f"{prefix}_{label}")
            files.extend([f"{prefix}_{label}.json", f"{prefix}_{label}.map.json", f"{prefix}_{label}.dot"])
            summary[label] = {'diameter': diameter(digraph).to_json(), 'volume': str(cactus_volume(digraph))}
        return {'outcome': Outcome.DONE, 'instance': InstanceDigest.of(g), 'details': {'graphs': summary, 'files': files}}

    _emit('generate', parameters, body)


@revdiam_cli.command('volume')
@click.argument('instance_file')
@click.option('--sweep', default=False, is_flag=True, help="every orientation as CSV", show_default=True)
@click.option('--method',
              type=click.Choice(['auto', 'ehrhart', 'lp', 'cactus']),
              default='auto',
              show_default=True,
              help="auto counts lattice points and falls back to the cactus product above the caps")
@click.option('--cache-file', default=None, help="JSON file memoizing volumes between runs")
@click.option('--output', default=None, help="write the sweep CSV here instead of stdout")
@click.option('--worker-threads', default=1, show_default=True, help="threads for the orientation sweep")
def cmd_volume(instance_file, sweep, method, cache_file, output, worker_threads):
    """Normalized volume of the directed edge polytope."""
    parameters = {'instance_file': instance_file, 'sweep': sweep, 'method': method}

    def body():
        cache = Cache(cache_file) if cache_file else None
        digraph = load_digraph(instance_file)
        if sweep:
            csv_text = sweep_to_csv(
                orientation_sweep(digraph,
                                  worker_threads=worker_threads,
                                  cache=cache,
                                  method='lp' if method == 'lp' else 'flow'))
            if output is None:
                click.echo(csv_text, nl=False)
                return {'outcome': Outcome.DONE, 'silent': True}
            with fsspec.open(output, "w", encoding="utf-8") as f:
                f.write(csv_text)
            return {'outcome': Outcome.DONE, 'instance': InstanceDigest.of(digraph), 'details': {'csv': output}}

        used = method
        if method == 'cactus':
            volume = cactus_volume(digraph)
        elif method == 'lp':
            volume = normalized_volume(directed_edge_polytope(digraph), method='lp')
        else:
            try:
                volume = cached_volume(directed_edge_polytope(digraph), cache)
                used = 'ehrhart'
            except VolumeCapExceeded:
                if method == 'ehrhart':
                    raise
                logger.info("Lattice point counting exceeds the caps, using the cactus product")
                volume = cactus_volume(digraph)
                used = 'cactus'
            if cache is not None:
                cache.flush()
        return {
            'outcome': Outcome.DONE,
            'instance': InstanceDigest.of(digraph),
            'details': {
                'method': used,
                'volume': str(volume),
                'volume_numerator': volume.numerator,
                'volume_denominator': volume.denominator,
                'dimension': volume.dimension
            }
        }

    _emit('volume', parameters, body)


@revdiam_cli.command('reproduce')
@click.argument('recipe_file', required=False)
@click.option('--workdir', default='.', show_default=True, help="directory generated files go to")
def cmd_reproduce(recipe_file, workdir):
    """Run a YAML recipe of revdiam commands and check their exit codes.

    Any step exiting with an unexpected code turns the run into an Error report.
    """
    recipe_file = recipe_file or str(BUNDLED_RECIPE)
    parameters = {'recipe_file': recipe_file, 'workdir': workdir}

    def body():
        with fsspec.open(recipe_file, "r", encoding="utf-8") as f:
            recipe = yaml.safe_load(f)
        os.makedirs(workdir, exist_ok=True)
        steps = []
        for step in recipe.get('steps', []):
            args = [str(a).format(workdir=workdir) for a in step['args']]
            expected = step.get('expect_exit', 0)
            logger.info(f"Step {step['name']}: revdiam {' '.join(args)}")
            try:
                code = revdiam_cli.main(args=args, prog_name='revdiam', standalone_mode=False)
            except click.ClickException as e:
                logger.error(f"Step {step['name']} rejected: {e.format_message()}")
                code = e.exit_code
            steps.append({'name': step['name'], 'exit_code': code, 'expected': expected, 'ok': code == expected})
        failed = [s['name'] for s in steps if not s['ok']]
        fields = {'outcome': Outcome.DONE}
        if failed:
            logger.error(f"{len(failed)} step(s) did not exit as expected: {failed}")
            fields = {'outcome': Outcome.ERROR, 'error': f"RecipeMismatch: {', '.join(failed)}"}
        return {
            **fields,
            'details': {
                'steps': steps,
                'failed': failed
            }
        }

    _emit('reproduce', parameters, body)


if __name__ == '__main__':
    revdiam_cli()
