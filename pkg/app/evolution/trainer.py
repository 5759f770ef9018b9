"""
Evolutionary training loop.

Population evaluation runs every genome through the simulator on one shared
scenario, serially or in a process pool; results come back in population
order, so fitness is identical for any degree of parallelism.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.config.settings import EvoConfig, SimulationConfig, WorkloadConfig
from app.core.exceptions import TrainingError
from app.core.logger import configure_worker_logging, current_level_name
from app.evolution.metrics import hypervolume_2d
from app.evolution.nsga2 import Individual, crowding_distance, fast_nondominated_sort, select_elites
from app.evolution.operators import crossover_onepoint, mutate_gaussian
from app.models.domain import UserRequest
from app.models.schemas import ParetoEntry, ParetoFrontFile
from app.policies.neural import NeuralPolicy, PolicyGenome, check_feature_shape, save_genome
from app.simulation.engine import run_episode
from app.simulation.objectives import Fitness, Normalizer, episode_fitness, scalarize
from app.utils.data_processor import DataProcessor
from app.utils.seeding import derive_seed, make_rng
from app.workload.generator import scenario_requests

logger = logging.getLogger("connection_router")

# Objective value given to aborted episodes when nothing in the population finished
ABORT_PENALTY_FALLBACK = 1e6
ABORT_PENALTY_FACTOR = 10.0
CONVERGENCE_COLUMNS = ["generation", "simulations", "best_score", "mean_score", "hypervolume"]


@dataclass(frozen=True)
class Scenario:
    """Requests plus the policy seed every individual is evaluated on."""
    requests: Tuple[UserRequest, ...]
    seed: int = 0


@dataclass
class GenerationRecord:
    generation: int
    simulations: int
    best_score: float
    mean_score: float
    hypervolume: float


@dataclass
class TrainingResult:
    front: List[Individual]
    history: List[GenerationRecord] = field(default_factory=list)
    simulations: int = 0
    generations: int = 0


# Worker-process scenario, installed once per pool by _init_worker
_worker_scenario: Optional[Scenario] = None
_worker_config: Optional[SimulationConfig] = None


def _init_worker(scenario: Scenario, sim_config: SimulationConfig, log_level: str) -> None:
    global _worker_scenario, _worker_config
    _worker_scenario = scenario
    _worker_config = sim_config
    configure_worker_logging(log_level)


def simulate_genome(genome: PolicyGenome, scenario: Scenario, sim_config: SimulationConfig) -> Optional[Fitness]:
    """Fitness of one genome on the scenario, or None if the episode aborted."""
    result = run_episode(scenario.requests, sim_config, NeuralPolicy(genome, sim_config), seed=scenario.seed)
    if result.terminated_early or result.num_timesteps == 0:
        return None
    return episode_fitness(result)


def _simulate_in_worker(weights: np.ndarray) -> Optional[Fitness]:
    return simulate_genome(PolicyGenome(weights), _worker_scenario, _worker_config)


def _apply_abort_penalty(population: Sequence[Individual]) -> None:
    finished = np.array([ind.fitness.as_array() for ind in population if not ind.aborted]).reshape(-1, 2)
    if len(finished):
        penalty = finished.max(axis=0) * ABORT_PENALTY_FACTOR
    else:
        penalty = np.full(2, ABORT_PENALTY_FALLBACK)
    for ind in population:
        if ind.aborted:
            ind.fitness = Fitness(f_balance=float(penalty[0]), f_idle=float(penalty[1]))


def evaluate_population(
    population: Sequence[Individual],
    scenario: Scenario,
    sim_config: SimulationConfig,
    parallelism: int = 1,
) -> int:
    """
    Evaluate every individual without a fitness on `scenario`.

    Aborted episodes receive a penalty of ten times the worst finished value
    per objective in the population.

    Args:
        population: Individuals, updated in place
        scenario: Shared requests and policy seed
        sim_config: Data center configuration
        parallelism: Worker processes; 1 evaluates in-process

    Returns:
        int: Number of simulations run
    """
    pending = [ind for ind in population if ind.fitness is None]
    if pending:
        if parallelism > 1 and len(pending) > 1:
            workers = min(parallelism, len(pending))
            chunksize = max(1, len(pending) // (workers * 4))
            with ProcessPoolExecutor(
                max_workers=workers, initializer=_init_worker, initargs=(scenario, sim_config, current_level_name())
            ) as executor:
                outcomes = list(executor.map(
                    _simulate_in_worker, [ind.genome.weights for ind in pending], chunksize=chunksize
                ))
        else:
            outcomes = [simulate_genome(ind.genome, scenario, sim_config) for ind in pending]

        for ind, fitness in zip(pending, outcomes):
            ind.aborted = fitness is None
            ind.fitness = fitness
        aborted = sum(ind.aborted for ind in pending)
        if aborted:
            logger.warning(f"{aborted} of {len(pending)} evaluated policies aborted their episode")

    if any(ind.aborted for ind in population):
        _apply_abort_penalty(population)
    return len(pending)


def make_offspring(
    elites: Sequence[Individual],
    count: int,
    evo_config: EvoConfig,
    rng: np.random.Generator,
    next_id: int,
) -> List[Individual]:
    """Cross random distinct elite pairs and mutate both children until `count` are made."""
    offspring: List[Individual] = []
    while len(offspring) < count:
        if len(elites) > 1:
            i, j = rng.choice(len(elites), size=2, replace=False)
        else:
            i = j = 0
        children = crossover_onepoint(elites[i].genome, elites[j].genome, rng)
        for child in children:
            if len(offspring) == count:
                break
            genome = mutate_gaussian(child, evo_config.mutation_prob, evo_config.mutation_sigma, rng)
            offspring.append(Individual(id=next_id, genome=genome))
            next_id += 1
    return offspring


def build_scenario(
    workload_config: WorkloadConfig,
    seed: int,
    index: int = 0,
    requests: Optional[Sequence[UserRequest]] = None,
) -> Scenario:
    """
    Training scenario `index` derived from the master seed.

    A supplied request list (a loaded trace) is used as is.
    """
    if requests is None:
        requests = scenario_requests(workload_config, seed, "train", index)
    return Scenario(requests=tuple(requests), seed=derive_seed(seed, "train", "policy", index))


def _front_file(front: Sequence[Individual], generation: int, simulations: int, hypervolume: float,
                capacity: float, genome_files: Optional[dict] = None) -> ParetoFrontFile:
    genome_files = genome_files or {}
    entries = [
        ParetoEntry(
            id=ind.id,
            f_balance=ind.fitness.f_balance * capacity,
            f_idle=ind.fitness.f_idle,
            genome_file=genome_files.get(ind.id),
        )
        for ind in sorted(front, key=lambda ind: (ind.fitness.f_balance, ind.fitness.f_idle, ind.id))
    ]
    return ParetoFrontFile(generation=generation, simulations=simulations, hypervolume=hypervolume, front=entries)


def train(
    evo_config: EvoConfig,
    workload_config: WorkloadConfig,
    sim_config: SimulationConfig,
    out_dir: str,
    seed: int = 0,
    parallelism: int = 1,
    requests: Optional[Sequence[UserRequest]] = None,
) -> TrainingResult:
    """
    Evolve routing genomes with NSGA-II until the simulation budget is spent.

    Writes pareto_gen_<k>.json per generation, genome_<id>.json for the final
    front and convergence.csv to `out_dir`.

    Args:
        evo_config: Population, variation and budget settings
        workload_config: Synthetic scenario parameters
        sim_config: Data center configuration
        out_dir: Output directory (created if missing)
        seed: Master seed
        parallelism: Worker processes for population evaluation
        requests: Fixed training requests (a trace) instead of generated scenarios

    Returns:
        TrainingResult: Final non-dominated front and per-generation history

    Raises:
        TrainingError: If the budget cannot cover one generation or out_dir is unwritable
    """
    check_feature_shape(sim_config)
    if evo_config.max_simulations < evo_config.pop_size:
        raise TrainingError(
            f"Budget of {evo_config.max_simulations} simulations cannot evaluate "
            f"one population of {evo_config.pop_size}"
        )
    output = Path(out_dir)
    try:
        output.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        error_msg = f"Cannot create output directory {output}: {e}"
        logger.error(error_msg)
        raise TrainingError(error_msg) from e

    per_generation = evo_config.eval_seed_policy == "per_generation"
    if per_generation and requests is not None:
        logger.warning("Per-generation scenarios need a generated workload; the supplied trace is reused")
        per_generation = False

    rng = make_rng(seed, "evolution")
    capacity = sim_config.mean_capacity
    population = [
        Individual(id=i, genome=PolicyGenome.random_uniform(rng, evo_config.init_scale))
        for i in range(evo_config.pop_size)
    ]
    next_id = evo_config.pop_size

    scenario = build_scenario(workload_config, seed, 0, requests)
    logger.info(
        f"Training on {len(scenario.requests)} requests: population {evo_config.pop_size}, "
        f"budget {evo_config.max_simulations} simulations"
    )
    simulations = evaluate_population(population, scenario, sim_config, parallelism)

    initial = np.array([ind.fitness.as_array() for ind in population])
    normalizer = Normalizer.from_fitnesses(ind.fitness for ind in population)
    reference = initial.max(axis=0) * 1.1
    history: List[GenerationRecord] = []

    def record(generation: int) -> List[Individual]:
        front = fast_nondominated_sort(population)[0]
        crowding_distance(front)
        hypervolume = hypervolume_2d(np.array([ind.fitness.as_array() for ind in front]), reference)
        scores = np.array([scalarize(ind.fitness, normalizer=normalizer) for ind in population])
        entry = GenerationRecord(generation, simulations, float(scores.min()), float(scores.mean()), hypervolume)
        history.append(entry)
        DataProcessor.save_json(
            _front_file(front, generation, simulations, hypervolume, capacity),
            str(output / f"pareto_gen_{generation}.json"),
        )
        message = (
            f"Generation {generation}: simulations={simulations}, front={len(front)}, "
            f"best={entry.best_score:.4f}, hypervolume={hypervolume:.6g}"
        )
        if generation % 10 == 0:
            logger.info(message)
        else:
            logger.debug(message)
        return front

    front = record(0)
    generation = 0
    cost = evo_config.pop_size if per_generation else evo_config.offspring_count
    while simulations + cost <= evo_config.max_simulations and cost > 0:
        generation += 1
        elites = select_elites(population, evo_config.elite_count)
        offspring = make_offspring(elites, evo_config.offspring_count, evo_config, rng, next_id)
        next_id += len(offspring)
        population = list(elites) + offspring
        if per_generation:
            scenario = build_scenario(workload_config, seed, generation)
            for ind in population:
                ind.fitness = None
                ind.aborted = False
        simulations += evaluate_population(population, scenario, sim_config, parallelism)
        front = record(generation)

    genome_files = {}
    for ind in front:
        filename = f"genome_{ind.id}.json"
        save_genome(ind.genome, str(output / filename))
        genome_files[ind.id] = filename
    DataProcessor.save_json(
        _front_file(front, generation, simulations, history[-1].hypervolume, capacity, genome_files),
        str(output / f"pareto_gen_{generation}.json"),
    )
    DataProcessor.save_rows_csv(
        [vars(entry) for entry in history], CONVERGENCE_COLUMNS, str(output / "convergence.csv")
    )
    logger.info(
        f"Training finished after {generation} generations and {simulations} simulations; "
        f"final front holds {len(front)} policies"
    )
    return TrainingResult(front=front, history=history, simulations=simulations, generations=generation)
