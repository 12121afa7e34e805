#!/usr/bin/env python3
"""
Interfaz de Línea de Comandos
=============================
Punto de entrada único de la tubería: simulate, pretrain, sweep, deploy, eval
y plotdata, guiados por un archivo de configuración JSON más banderas.

Códigos de salida: 0 éxito, 1 uso o configuración, 2 datos o checkpoint,
3 falla numérica (parámetros no finitos).
"""

import logging
import os
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import click
import pandas as pd
from rich.console import Console
from rich.table import Table

from . import __version__
from .config.settings import Config
from .core.encoder import StateEncoder
from .core.evaluation import evaluate_log, log_targets
from .core.gvf import derive_seeds
from .core.logs import FLOAT_FORMAT, DeploymentLog
from .core.pipeline import ALGORITHMS, LEARNER_KINDS, build_training_set, deploy_learner, pretrain_learner
from .core.sweep import SweepGrid, ValidationSweep, two_stage_sweep
from .data.ingest import (
    Dataset,
    load_records,
    prepare_dataset,
    save_records,
    split_dataset,
    split_from_fractions,
    split_from_tail,
    subsample,
)
from .simulator.plant import generate, inject_shift, packaged_scenario, scenario_from_dict, scenario_to_dict, shift_from_dict
from .storage.checkpoints import RunManifest, checkpoint_metadata, load_checkpoint, save_checkpoint
from .utils.errors import DataError, GVFPredictorError
from .utils.helpers import guardar_json, setup_logging

logger = logging.getLogger(__name__)

console = Console()
error_console = Console(stderr=True)

Segmentos = Tuple[Dataset, Dataset, Dataset, List[str]]


def _cargar_config(config_path: Optional[str], seed: Optional[int], gamma: Optional[float],
                   n: Optional[int], alpha: Optional[float], eta: Optional[float],
                   out: Optional[str]) -> Config:
    """Configuración del archivo (o por defecto) con las banderas aplicadas encima"""
    config = Config.from_file(config_path) if config_path else Config()
    config.override(seed=seed, gamma=gamma, n=n, alpha=alpha, eta=eta, out=out)
    config.paths.ensure()
    setup_logging("gvf_predictor", config.paths.logs_path, config.logging.level,
                  config.logging.file_handler, config.logging.console_handler, config.logging.format)
    return config


def opciones_comunes(algos: Sequence[str], default: str) -> Callable:
    """Banderas compartidas por todos los subcomandos"""
    def decorador(fn: Callable) -> Callable:
        opciones = [
            click.option('--config', 'config_path', type=click.Path(dir_okay=False), default=None,
                         help='Archivo de configuración JSON'),
            click.option('--seed', type=click.IntRange(min=0), default=None, help='Semilla raíz'),
            click.option('--algo', type=click.Choice(list(algos)), default=default, show_default=True,
                         help='Algoritmo o tipo de aprendiz'),
            click.option('--gamma', type=float, default=None, help='Descuento de la GVF'),
            click.option('--n', 'n', type=int, default=None, help='Horizonte n-step'),
            click.option('--alpha', type=float, default=None, help='Tamaño de paso en línea'),
            click.option('--eta', type=float, default=None, help='Tamaño de paso fuera de línea'),
            click.option('--out', type=click.Path(file_okay=False), default=None, help='Directorio de salida'),
        ]
        for opcion in reversed(opciones):
            fn = opcion(fn)
        return fn
    return decorador


def _ruta_datos(config: Config, data: Optional[str]) -> str:
    return data or config.data.path or config.paths.artifact("telemetria.csv")


def _segmentos(config: Config, data: Optional[str]) -> Segmentos:
    """
    Cargar, preparar y partir la telemetría

    Los rangos de normalización y los sensores constantes se determinan sobre
    el segmento de entrenamiento (o el log de referencia si se configuró).
    """
    crudo = load_records(_ruta_datos(config, data))
    referencia = load_records(config.data.reference_path) if config.data.reference_path else None
    n = len(subsample(crudo, config.data.subsample_every))
    if config.split.validation_steps is not None:
        particion = split_from_tail(n, config.split.validation_steps, config.split.deployment_steps or 0)
    else:
        particion = split_from_fractions(n, config.split.train_fraction, config.split.validation_fraction)
    preparado, eliminados = prepare_dataset(crudo, config.data.subsample_every,
                                            reference_end=particion.train_end, reference=referencia)
    if eliminados:
        logger.info(f"Sensores constantes fuera del estado: {', '.join(eliminados)}")
    train, validation, deployment = split_dataset(preparado, particion)
    return train, validation, deployment, eliminados


def _manifiesto(config: Config, comando: str, datos: Optional[str] = None,
                encoder: Optional[StateEncoder] = None) -> Tuple[RunManifest, str]:
    """Manifiesto guardado antes de calcular; se reescribe al final con los artefactos"""
    init, shuffle, replay = derive_seeds(config.seed)
    manifiesto = RunManifest(
        command=comando,
        config=config.to_dict(),
        seeds={'root': config.seed, 'init': init, 'shuffle': shuffle, 'replay': replay},
        encoder_layout=encoder.layout() if encoder is not None else None,
    )
    if datos is not None and os.path.exists(datos):
        manifiesto.add_dataset(os.path.basename(datos), datos)
    ruta = config.paths.artifact(f"manifest_{comando}.json")
    manifiesto.save(ruta)
    return manifiesto, ruta


def _cerrar_manifiesto(manifiesto: RunManifest, ruta: str, **artefactos: str) -> None:
    manifiesto.artifacts.update(artefactos)
    manifiesto.save(ruta)


def _mostrar(titulo: str, filas: Dict[str, Any]) -> None:
    tabla = Table(title=titulo, show_header=False)
    tabla.add_column("campo", style="cyan")
    tabla.add_column("valor")
    for clave, valor in filas.items():
        tabla.add_row(clave, f"{valor:.6g}" if isinstance(valor, float) else str(valor))
    console.print(tabla)


def _ruta_checkpoint(config: Config, kind: str, checkpoint: Optional[str]) -> str:
    return checkpoint or config.paths.artifact(f"checkpoint_{kind}.npz")


@click.group()
@click.version_option(__version__, prog_name="gvf-predictor")
def cli():
    """Predicción GVF y n-step sobre telemetría de sensores."""


@cli.command()
@opciones_comunes(ALGORITHMS, "onlinetd")
@click.option('--steps', type=click.IntRange(min=1), default=None, help='Registros a generar')
def simulate(config_path, seed, algo, gamma, n, alpha, eta, out, steps):
    """Generar telemetría sintética de planta."""
    config = _cargar_config(config_path, seed, gamma, n, alpha, eta, out)
    manifiesto, ruta_manifiesto = _manifiesto(config, "simulate")

    if config.simulator.scenario is not None:
        scenario = scenario_from_dict(config.simulator.scenario)
    else:
        scenario = packaged_scenario(config.seed)
    d = generate(scenario, steps or config.simulator.steps, seed=config.seed)
    if config.simulator.shift is not None:
        d = inject_shift(d, shift_from_dict(config.simulator.shift))

    salida = save_records(d, _ruta_datos(config, None))
    escenario = guardar_json(scenario_to_dict(scenario), config.paths.artifact("escenario.json"))
    _cerrar_manifiesto(manifiesto, ruta_manifiesto, dataset=salida, scenario=escenario)
    _mostrar("🏭 Simulación", {'registros': len(d), 'sensores': d.width, 'archivo': salida})


@cli.command()
@opciones_comunes(LEARNER_KINDS, "td")
@click.option('--data', type=click.Path(dir_okay=False), default=None, help='Telemetría de entrada')
def pretrain(config_path, seed, algo, gamma, n, alpha, eta, out, data):
    """Preentrenar fuera de línea (td u nstep) y guardar el checkpoint."""
    config = _cargar_config(config_path, seed, gamma, n, alpha, eta, out)
    train, _, _, _ = _segmentos(config, data)
    encoder = StateEncoder(config.encoder, train.meta)
    manifiesto, ruta_manifiesto = _manifiesto(config, "pretrain", _ruta_datos(config, data), encoder)

    conjunto = build_training_set(train, config, algo)
    net, opt = pretrain_learner(conjunto, config, algo, derive_seeds(config.seed)[0])
    ruta = save_checkpoint(net, opt, config.paths.artifact(f"checkpoint_{algo}.npz"), kind=algo,
                           layout_hash=encoder.layout_hash(), extra={'seed': config.seed})
    _cerrar_manifiesto(manifiesto, ruta_manifiesto, checkpoint=ruta)
    _mostrar("🧠 Preentrenamiento", {'aprendiz': algo, 'ejemplos': len(conjunto),
                                      'parámetros': net.parameter_count, 'checkpoint': ruta})


@cli.command()
@opciones_comunes(LEARNER_KINDS, "td")
@click.option('--data', type=click.Path(dir_okay=False), default=None, help='Telemetría de entrada')
@click.option('--two-stage', is_flag=True, default=False,
              help='Elegir η por NMSE de entrenamiento y luego α sobre la validación')
def sweep(config_path, seed, algo, gamma, n, alpha, eta, out, data, two_stage):
    """Barrido η x α tratando la validación como un despliegue."""
    config = _cargar_config(config_path, seed, gamma, n, alpha, eta, out)
    train, validation, _, _ = _segmentos(config, data)
    encoder = StateEncoder(config.encoder, train.meta)
    manifiesto, ruta_manifiesto = _manifiesto(config, "sweep", _ruta_datos(config, data), encoder)

    etas, alphas = config.evaluation.sweep_etas, config.evaluation.sweep_alphas
    if two_stage:
        resultado = two_stage_sweep(train, validation, etas, alphas, algo, config)
    else:
        resultado = ValidationSweep(train, validation, config, algo).run(SweepGrid(etas, alphas))

    reporte = config.paths.artifact("sweep_report.csv")
    resultado.to_frame().to_csv(reporte, float_format=FLOAT_FORMAT, lineterminator='\n')
    mejor = guardar_json(resultado.to_dict(), config.paths.artifact("sweep_best.json"))
    _cerrar_manifiesto(manifiesto, ruta_manifiesto, sweep_report=reporte, sweep_best=mejor)
    _mostrar("🔎 Barrido de validación", {'aprendiz': algo, 'eta': resultado.best_eta,
                                            'alpha': resultado.best_alpha, 'error': resultado.best_error})


@cli.command()
@opciones_comunes(ALGORITHMS, "onlinetd")
@click.option('--data', type=click.Path(dir_okay=False), default=None, help='Telemetría de entrada')
@click.option('--checkpoint', type=click.Path(dir_okay=False), default=None, help='Checkpoint preentrenado')
def deploy(config_path, seed, algo, gamma, n, alpha, eta, out, data, checkpoint):
    """Desplegar una red preentrenada (onlinetd, tdreplay, nstep o frozen)."""
    config = _cargar_config(config_path, seed, gamma, n, alpha, eta, out)
    train, _, deployment, _ = _segmentos(config, data)
    if len(deployment) == 0:
        raise DataError("El segmento de despliegue está vacío; revise la partición")
    encoder = StateEncoder(config.encoder, deployment.meta)
    manifiesto, ruta_manifiesto = _manifiesto(config, "deploy", _ruta_datos(config, data), encoder)

    ruta = _ruta_checkpoint(config, "nstep" if algo == "nstep" else "td", checkpoint)
    kind = checkpoint_metadata(ruta)['kind']
    net, opt = load_checkpoint(ruta, expected_layout_hash=encoder.layout_hash())
    conjunto = build_training_set(train, config, kind) if algo == "tdreplay" else None

    log = deploy_learner(algo, net, opt, deployment, config, kind, training_set=conjunto, seed=config.seed)
    salida = log.to_csv(config.paths.artifact(f"deploy_{algo}.csv"))
    _cerrar_manifiesto(manifiesto, ruta_manifiesto, checkpoint=ruta, deployment_log=salida)
    _mostrar("🚀 Despliegue", {'algoritmo': algo, 'pasos': len(log),
                               'actualizaciones': len(log.updates), 'log': salida})


def _leer_log(config: Config, algo: str, log_path: Optional[str]) -> Tuple[DeploymentLog, str]:
    ruta = log_path or config.paths.artifact(f"deploy_{algo}.csv")
    return DeploymentLog.from_csv(ruta, horizon=config.nstep.n), ruta


@cli.command(name="eval")
@opciones_comunes(ALGORITHMS, "onlinetd")
@click.option('--log', 'log_path', type=click.Path(dir_okay=False), default=None, help='Log de despliegue')
def evaluate(config_path, seed, algo, gamma, n, alpha, eta, out, log_path):
    """Serie de NMSE y resumen de un log de despliegue."""
    config = _cargar_config(config_path, seed, gamma, n, alpha, eta, out)
    log, ruta_log = _leer_log(config, algo, log_path)
    manifiesto, ruta_manifiesto = _manifiesto(config, "eval", ruta_log)

    ev = config.evaluation
    frame, resumen = evaluate_log(log, config.td.gamma, ev.decay, ev.tol, ev.burn_in, ev.summary_fraction)
    serie = config.paths.artifact(f"nmse_{algo}.csv")
    frame.to_csv(serie, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    ruta_resumen = guardar_json(resumen.to_dict(), config.paths.artifact(f"eval_summary_{algo}.json"))
    _cerrar_manifiesto(manifiesto, ruta_manifiesto, nmse=serie, summary=ruta_resumen)
    _mostrar(f"📊 Evaluación {algo}", resumen.to_dict())


@cli.command()
@opciones_comunes(ALGORITHMS, "onlinetd")
@click.option('--log', 'log_path', type=click.Path(dir_okay=False), default=None, help='Log de despliegue')
def plotdata(config_path, seed, algo, gamma, n, alpha, eta, out, log_path):
    """Columnas alineadas (cumulante, predicción, retorno) para graficar."""
    config = _cargar_config(config_path, seed, gamma, n, alpha, eta, out)
    log, ruta_log = _leer_log(config, algo, log_path)
    manifiesto, ruta_manifiesto = _manifiesto(config, "plotdata", ruta_log)

    objetivos, parcial = log_targets(log, config.td.gamma, config.evaluation.tol)
    frame = pd.DataFrame({
        'step': log.steps,
        'cumulant': log.cumulant_array,
        'prediction': log.prediction_array,
        'return': objetivos,
        'partial': parcial,
    })
    salida = config.paths.artifact(f"plotdata_{algo}.csv")
    frame.to_csv(salida, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    _cerrar_manifiesto(manifiesto, ruta_manifiesto, plotdata=salida)
    _mostrar("📈 Datos para graficar", {'filas': len(frame), 'archivo': salida})


def run_command(argv: Optional[Sequence[str]] = None) -> int:
    """
    Ejecutar un subcomando y traducir errores a códigos de salida

    Args:
        argv: Argumentos (sin el nombre del programa)

    Returns:
        0 éxito, 1 uso o configuración, 2 datos, 3 falla numérica
    """
    try:
        resultado = cli.main(args=list(argv) if argv is not None else None,
                             prog_name="gvf-predictor", standalone_mode=False)
    except GVFPredictorError as e:
        logger.error(f"{e.error_type}: {e}")
        error_console.print(f"[bold red]❌ {e.error_type}[/bold red]: {e}")
        error_console.print_json(data=e.to_response())
        return e.exit_code
    except click.exceptions.Abort:
        error_console.print("[yellow]⚠️ Operación cancelada[/yellow]")
        return 1
    except click.ClickException as e:
        e.show()
        return 1
    except OSError as e:
        error_console.print(f"[bold red]❌ Error de archivo[/bold red]: {e}")
        return DataError.exit_code
    return resultado if isinstance(resultado, int) else 0


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
