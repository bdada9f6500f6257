"""
Real-time serve mode.

The kernel advances one tick per ``serve.tick_wall_s`` of wall time inside an
asyncio loop.  Each exporter registry is served over HTTP by prometheus-client
on its own port, and the gNB stats API is served over WebSocket.  The kernel
loop is the only mutator: HTTP threads read immutable exporter snapshots and
WebSocket ``config_set`` messages are enqueued as kernel events.
"""

from __future__ import annotations

import asyncio
import logging
from typing import Any, List, Tuple

from prometheus_client import start_http_server
from websockets.asyncio.server import ServerConnection, serve
from websockets.exceptions import ConnectionClosed

from .kernel import SimTime
from .testbed import Testbed

logger = logging.getLogger(__name__)


def exporter_ports(testbed: Testbed) -> List[Tuple[str, int]]:
    """``(target id, port)`` of every exporter endpoint."""
    serve_config = testbed.config.serve
    ports = [
        (exporter.target_id, serve_config.node_exporter_base_port + i)
        for i, exporter in enumerate(testbed.monitoring.node_exporters.values())
    ]
    ports.append((testbed.monitoring.sampler.target_id, serve_config.sampler_port))
    return ports


def start_exporters(testbed: Testbed) -> List[Any]:
    """Start one HTTP exposition server per exporter and return the servers."""
    host = testbed.config.serve.host
    registries = {e.target_id: e.registry for e in testbed.monitoring.node_exporters.values()}
    registries[testbed.monitoring.sampler.target_id] = testbed.monitoring.sampler.registry
    servers = []
    for target_id, port in exporter_ports(testbed):
        server, _thread = start_http_server(port, addr=host, registry=registries[target_id])
        servers.append(server)
        logger.info("exporter %s at http://%s:%d/metrics", target_id, host, port)
    return servers


async def _ran_api_handler(testbed: Testbed, connection: ServerConnection) -> None:
    try:
        async for message in connection:
            text = message if isinstance(message, str) else message.decode("utf-8", "replace")
            await connection.send(testbed.api.handle_text(text))
    except ConnectionClosed:
        pass


async def serve_async(testbed: Testbed, end: SimTime) -> None:
    serve_config = testbed.config.serve

    async def handler(connection: ServerConnection) -> None:
        await _ran_api_handler(testbed, connection)

    async with serve(handler, serve_config.host, serve_config.ran_api_port):
        logger.info("RAN stats API at ws://%s:%d", serve_config.host, serve_config.ran_api_port)
        loop = asyncio.get_running_loop()
        deadline = loop.time()
        for tick in range(testbed.kernel.now(), end + 1):
            testbed.run_until(tick)
            deadline += serve_config.tick_wall_s
            await asyncio.sleep(max(0.0, deadline - loop.time()))


def serve_run(testbed: Testbed, end: SimTime) -> None:
    """Run ``testbed`` to tick ``end`` in real time while serving its endpoints."""
    servers = start_exporters(testbed)
    try:
        asyncio.run(serve_async(testbed, end))
    finally:
        for server in servers:
            server.shutdown()
            server.server_close()
