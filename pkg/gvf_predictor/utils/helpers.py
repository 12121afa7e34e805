"""
Módulo de utilidades para el sistema GVF Predictor.

Este módulo proporciona funciones auxiliares para:
- Configuración de logging
- Generación de hashes de archivos y arreglos
- Utilidades de sistema (directorios, JSON)
"""

import os
import json
import hashlib
import logging
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np


def obtener_hash_archivo(ruta: Union[str, Path], algoritmo: str = 'sha256') -> str:
    """
    Genera un hash del contenido de un archivo.

    Args:
        ruta: Ruta del archivo
        algoritmo: Algoritmo de hash a usar ('md5', 'sha1', 'sha256')

    Returns:
        Hash hexadecimal del contenido o cadena vacía si no existe
    """
    if not os.path.exists(ruta):
        return ""

    hash_obj = hashlib.new(algoritmo)
    with open(ruta, 'rb') as f:
        for bloque in iter(lambda: f.read(1 << 20), b''):
            hash_obj.update(bloque)
    return hash_obj.hexdigest()


def obtener_hash_contenido(contenido: Union[bytes, str], algoritmo: str = 'sha256') -> str:
    """
    Genera un hash de un contenido en memoria.

    Args:
        contenido: Bytes o texto (se codifica en UTF-8)
        algoritmo: Algoritmo de hash a usar

    Returns:
        Hash hexadecimal del contenido
    """
    if isinstance(contenido, str):
        contenido = contenido.encode('utf-8')
    hash_obj = hashlib.new(algoritmo)
    hash_obj.update(contenido)
    return hash_obj.hexdigest()


def _a_json(valor: Any) -> Any:
    """Convertir tipos de numpy y rutas a tipos serializables"""
    if isinstance(valor, np.integer):
        return int(valor)
    if isinstance(valor, np.floating):
        return float(valor)
    if isinstance(valor, np.ndarray):
        return valor.tolist()
    if isinstance(valor, Path):
        return str(valor)
    raise TypeError(f"Tipo no serializable: {type(valor).__name__}")


def guardar_json(datos: Dict[str, Any], ruta: Union[str, Path]) -> str:
    """
    Guardar un diccionario como JSON legible (UTF-8, claves ordenadas).

    Args:
        datos: Datos a guardar
        ruta: Ruta de destino

    Returns:
        Ruta del archivo guardado
    """
    os.makedirs(os.path.dirname(os.path.abspath(ruta)), exist_ok=True)
    with open(ruta, 'w', encoding='utf-8') as f:
        json.dump(datos, f, indent=2, ensure_ascii=False, sort_keys=True, default=_a_json)
    return str(ruta)


def cargar_json(ruta: Union[str, Path]) -> Dict[str, Any]:
    """
    Cargar un archivo JSON.

    Args:
        ruta: Ruta del archivo

    Returns:
        Diccionario con el contenido
    """
    with open(ruta, 'r', encoding='utf-8') as f:
        return json.load(f)


def setup_logging(name: str, log_dir: str = "logs", level: str = "INFO",
                  file_handler: bool = True, console_handler: bool = True,
                  log_format: str = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
                  ) -> logging.Logger:
    """
    Configura el sistema de logging para el proyecto.

    Args:
        name: Nombre del logger
        log_dir: Directorio para archivos de log
        level: Nivel de logging (DEBUG, INFO, WARNING, ERROR)
        file_handler: Si True, escribe en ``<log_dir>/<name>.log``
        console_handler: Si True, escribe también en consola
        log_format: Formato de los mensajes

    Returns:
        Logger configurado
    """
    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, level.upper()))

    # Evitar duplicar handlers
    if logger.handlers:
        return logger

    formatter = logging.Formatter(log_format)

    if file_handler:
        os.makedirs(log_dir, exist_ok=True)
        log_file = os.path.join(log_dir, f"{name}.log")
        handler = logging.FileHandler(log_file, encoding='utf-8')
        handler.setLevel(logging.DEBUG)
        handler.setFormatter(formatter)
        logger.addHandler(handler)

    if console_handler:
        consola = logging.StreamHandler()
        consola.setLevel(logging.INFO)
        consola.setFormatter(formatter)
        logger.addHandler(consola)

    return logger
