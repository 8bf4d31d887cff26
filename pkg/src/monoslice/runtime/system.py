"""Service execution: instances, threading, local and socket endpoints.

start() runs any subset of a checked program's services in one process.
Input ports with local:// locations register in an in-process registry;
socket:// ports get an HTTP server. The two transports are
observationally equivalent: message trees are deep-copied at every
boundary so in-process execution cannot share state that serialization
would have severed.

Execution modes: concurrent runs each activation in a fresh scope on
its own bounded daemon thread; sequential serializes activations in one
persistent scope (so a service can keep state across requests); single
serves exactly one activation and then stops. A service whose main is a
statement sequence is executable: it runs once to completion after
startup.
"""

from __future__ import annotations

import logging
import queue
import threading
from dataclasses import dataclass, field

from ..ast import (
    InputChoice,
    Path,
    PathStep,
    RequestResponseBranch,
    ServiceDecl,
    StatementSequence,
)
from ..config import (
    BadLocationSyntax,
    Location,
    resolve_location,
    validate_config,
)
from ..errors import MonosliceError, NoServices
from ..semantics import CheckedProgram, OpInfo, check_value
from ..values import Long, ValueTree
from .interpreter import (
    ExecutionContext,
    Fault,
    FaultSignal,
    assign_path,
    exec_statements,
    fault,
    read_path,
)
from . import transport
from .transport import HttpPortServer, TransportError, http_invoke_ow, http_invoke_rr

log = logging.getLogger("monoslice.runtime")

DEFAULT_INVOKE_TIMEOUT = 30.0
DEFAULT_RECEIVE_TIMEOUT = 30.0
DEFAULT_SHUTDOWN_TIMEOUT = 5.0
_POOL_WORKERS = 32


class BindError(MonosliceError):
    def __init__(self, location: str, reason: str):
        self.location = location
        super().__init__(f"cannot bind {location}: {reason}")


class _ReplySlot:
    def __init__(self):
        self._event = threading.Event()
        self._result: ValueTree | Fault | None = None

    def set(self, result: ValueTree | Fault) -> None:
        self._result = result
        self._event.set()

    def wait(self, timeout: float) -> ValueTree | Fault | None:
        if not self._event.wait(timeout):
            return None
        return self._result


@dataclass
class _Work:
    info: OpInfo
    tree: ValueTree
    slot: _ReplySlot | None


@dataclass
class _Endpoint:
    """One bound input port: the owning instance plus the port's operations."""

    instance: "ServiceInstance"
    ops: dict[str, OpInfo]


def _violation_fault(violations) -> Fault:
    message = "; ".join(str(v) for v in violations)
    return Fault("TypeMismatch", ValueTree(message))


def _normalize_message(tree: ValueTree) -> ValueTree:
    """Copy a tree the way a JSON round trip would shape it (ints become longs).

    The in-process transport must be indistinguishable from the wire, so
    every message crossing a boundary is normalized to the wire image.
    """
    root = tree.root
    if isinstance(root, int) and not isinstance(root, bool):
        root = Long(root)
    out = ValueTree(root)
    for name, seq in tree.children.items():
        out.children[name] = [_normalize_message(t) for t in seq]
    return out


class _ActivationContext(ExecutionContext):
    def __init__(self, instance: "ServiceInstance", scope: ValueTree):
        self.instance = instance
        self.scope = scope
        self.output_ports = instance.output_port_names

    def solicit(self, port: str, operation: str, request: ValueTree) -> ValueTree:
        try:
            result = self.instance.solicit_out(port, operation, request)
        except TransportError as exc:
            raise fault("TransportError", str(exc)) from exc
        if isinstance(result, Fault):
            raise FaultSignal(result)
        return result

    def send_oneway(self, port: str, operation: str, message: ValueTree) -> None:
        try:
            self.instance.send_oneway_out(port, operation, message)
        except TransportError as exc:
            raise fault("TransportError", str(exc)) from exc

    def receive(self, operation: str) -> ValueTree:
        return self.instance.receive(operation)

    def rebind(self, port: str, location_text: str) -> None:
        try:
            location = Location.parse(location_text)
        except BadLocationSyntax as exc:
            raise fault("BadLocation", str(exc)) from exc
        self.instance.set_binding(port, location)


class ServiceInstance:
    def __init__(self, system: "RunningSystem", decl: ServiceDecl, config_tree: ValueTree):
        self.system = system
        self.decl = decl
        self.name = decl.name
        self.mode = decl.execution
        self.config_tree = config_tree
        self.output_port_names = frozenset(p.name for p in decl.output_ports)
        self.behavior = decl.behavior
        self.branches = (
            {b.operation: b for b in decl.behavior.branches}
            if isinstance(decl.behavior, InputChoice)
            else {}
        )
        self.input_locations: list[Location] = []

        self._bindings: dict[str, Location] = {}
        self._bindings_lock = threading.Lock()
        self._queue: "queue.SimpleQueue[_Work | None]" = queue.SimpleQueue()
        self._receive_queues: dict[str, "queue.SimpleQueue[ValueTree]"] = {}
        self._receive_lock = threading.Lock()
        self._stopped = threading.Event()
        self._threads: list[threading.Thread] = []
        self._executable_thread: threading.Thread | None = None
        self._handler_slots = threading.BoundedSemaphore(_POOL_WORKERS)

        self._stats_lock = threading.Lock()
        self.served = 0
        self.fault_names: list[str] = []
        self.in_flight = 0
        self.exit_fault: Fault | None = None
        self.executable_done = False

    # -- lifecycle -----------------------------------------------------

    @property
    def is_executable(self) -> bool:
        return isinstance(self.behavior, StatementSequence)

    @property
    def stopped(self) -> bool:
        return self._stopped.is_set()

    def seed_scope(self) -> ValueTree:
        scope = ValueTree()
        if self.decl.config is not None:
            scope.children[self.decl.config.name] = [self.config_tree.copy()]
        return scope

    def start_workers(self) -> None:
        if self.is_executable:
            return
        if self.mode.value == "concurrent":
            thread = threading.Thread(
                target=self._feed_handlers, name=f"{self.name}-feeder", daemon=True
            )
        else:
            thread = threading.Thread(
                target=self._run_serialized, name=f"{self.name}-worker", daemon=True
            )
        self._threads.append(thread)
        thread.start()

    def start_executable(self) -> None:
        if not self.is_executable:
            return
        thread = threading.Thread(target=self._run_executable, name=f"{self.name}-main", daemon=True)
        self._executable_thread = thread
        thread.start()

    def request_stop(self) -> None:
        self._stopped.set()
        self._queue.put(None)

    def join(self, timeout: float) -> int:
        """Join worker threads; returns the number of still-running activations."""
        for thread in self._threads:
            thread.join(timeout)
        if self._executable_thread is not None:
            self._executable_thread.join(timeout)
        with self._stats_lock:
            return self.in_flight

    # -- worker loops ----------------------------------------------------

    def _run_serialized(self) -> None:
        scope = self.seed_scope()  # persists across activations
        while True:
            work = self._queue.get()
            if work is None:
                return
            self._run_activation(work, scope)
            if self.mode.value == "single":
                self._stopped.set()
                self._drain_queue()
                return

    def _feed_handlers(self) -> None:
        # daemon handler threads, bounded; daemons cannot block process exit
        while True:
            work = self._queue.get()
            if work is None:
                return
            self._handler_slots.acquire()
            threading.Thread(
                target=self._run_in_fresh_scope,
                args=(work,),
                name=f"{self.name}-handler",
                daemon=True,
            ).start()

    def _run_in_fresh_scope(self, work: _Work) -> None:
        try:
            self._run_activation(work, self.seed_scope())
        finally:
            self._handler_slots.release()

    def _drain_queue(self) -> None:
        while True:
            try:
                work = self._queue.get_nowait()
            except queue.Empty:
                return
            if work is not None:
                self._reply_stopped(work)

    def _reply_stopped(self, work: _Work) -> None:
        if work.slot is not None:
            work.slot.set(Fault("TransportError", ValueTree(f"service {self.name} has stopped")))

    def _run_activation(self, work: _Work, scope: ValueTree) -> None:
        with self._stats_lock:
            self.in_flight += 1
        ctx = _ActivationContext(self, scope)
        try:
            branch = self.branches[work.info.name]
            bind = Path([PathStep(branch.request_var)])
            assign_path(scope, bind, work.tree, ctx, replace=True)
            exec_statements(branch.body, ctx)
            if work.slot is not None and isinstance(branch, RequestResponseBranch):
                response = _normalize_message(
                    read_path(scope, Path([PathStep(branch.response_var)]), ctx)
                )
                violations = check_value(
                    response, work.info.response, self.system.checked.type_table
                )
                if violations:
                    self._record_fault("TypeMismatch")
                    work.slot.set(_violation_fault(violations))
                else:
                    work.slot.set(response)
        except FaultSignal as signal:
            self._record_fault(signal.fault.name)
            if work.slot is not None:
                work.slot.set(signal.fault)
        except Exception as exc:  # defensive: a handler bug must not kill the worker
            log.exception("internal error in %s.%s", self.name, work.info.name)
            self._record_fault("InternalError")
            if work.slot is not None:
                work.slot.set(Fault("InternalError", ValueTree(str(exc))))
        finally:
            with self._stats_lock:
                self.in_flight -= 1
                self.served += 1

    def _run_executable(self) -> None:
        with self._stats_lock:
            self.in_flight += 1
        scope = self.seed_scope()
        ctx = _ActivationContext(self, scope)
        try:
            exec_statements(self.behavior.statements, ctx)
        except FaultSignal as signal:
            self.exit_fault = signal.fault
            self._record_fault(signal.fault.name)
        except Exception as exc:
            log.exception("internal error in executable service %s", self.name)
            self.exit_fault = Fault("InternalError", ValueTree(str(exc)))
            self._record_fault("InternalError")
        finally:
            self.executable_done = True
            with self._stats_lock:
                self.in_flight -= 1

    def _record_fault(self, name: str) -> None:
        with self._stats_lock:
            self.fault_names.append(name)

    # -- inbound ---------------------------------------------------------

    def offer_rr(self, info: OpInfo, tree: ValueTree, timeout: float) -> ValueTree | Fault:
        if self.stopped:
            raise TransportError(f"service {self.name} has stopped")
        branch = self.branches.get(info.name)
        if not isinstance(branch, RequestResponseBranch):
            return Fault(
                "UnknownOperation",
                ValueTree(f"service {self.name} has no handler for '{info.name}'"),
            )
        tree = _normalize_message(tree)
        violations = check_value(tree, info.request, self.system.checked.type_table)
        if violations:
            return _violation_fault(violations)
        slot = _ReplySlot()
        self._queue.put(_Work(info, tree, slot))
        result = slot.wait(timeout)
        if result is None:
            return Fault("Timeout", ValueTree(f"no reply from {self.name}.{info.name}"))
        return result

    def offer_ow(self, info: OpInfo, tree: ValueTree) -> None:
        if self.stopped:
            raise TransportError(f"service {self.name} has stopped")
        tree = _normalize_message(tree)
        violations = check_value(tree, info.request, self.system.checked.type_table)
        if violations:
            log.warning(
                "dropping one-way %s to %s: %s",
                info.name,
                self.name,
                "; ".join(str(v) for v in violations),
            )
            return
        if self.is_executable:
            self._receive_queue(info.name).put(tree)
            return
        if info.name not in self.branches:
            log.warning("dropping one-way %s: no handler in %s", info.name, self.name)
            return
        self._queue.put(_Work(info, tree, None))

    def _receive_queue(self, operation: str) -> "queue.SimpleQueue[ValueTree]":
        with self._receive_lock:
            return self._receive_queues.setdefault(operation, queue.SimpleQueue())

    def receive(self, operation: str) -> ValueTree:
        try:
            return self._receive_queue(operation).get(timeout=DEFAULT_RECEIVE_TIMEOUT)
        except queue.Empty:
            raise fault("Timeout", f"no '{operation}' message arrived") from None

    # -- outbound ----------------------------------------------------------

    def binding(self, port: str) -> Location:
        with self._bindings_lock:
            return self._bindings[port]

    def set_binding(self, port: str, location: Location) -> None:
        with self._bindings_lock:
            self._bindings[port] = location

    def solicit_out(self, port: str, operation: str, request: ValueTree) -> ValueTree | Fault:
        location = self.binding(port)
        timeout = self.system.invoke_timeout
        if location.scheme == "local":
            return self.system.local_invoke_rr(location, operation, request, timeout)
        return http_invoke_rr(location, operation, request, timeout)

    def send_oneway_out(self, port: str, operation: str, message: ValueTree) -> None:
        location = self.binding(port)
        if location.scheme == "local":
            self.system.local_invoke_ow(location, operation, message)
        else:
            http_invoke_ow(location, operation, message, self.system.invoke_timeout)


# ---------------------------------------------------------------------------
# reports


@dataclass
class ServiceReport:
    name: str
    served: int
    faults: list[str]
    executable: bool
    executable_fault: str | None
    aborted: int

    def line(self) -> str:
        parts = [f"{self.name}: served={self.served}", f"faults={len(self.faults)}"]
        if self.executable:
            verdict = self.executable_fault or "completed"
            parts.append(f"executable={verdict}")
        if self.aborted:
            parts.append(f"aborted={self.aborted}")
        return " ".join(parts)


@dataclass
class SystemReport:
    services: list[ServiceReport] = field(default_factory=list)

    def executable_faults(self) -> dict[str, str | None]:
        return {r.name: r.executable_fault for r in self.services if r.executable}

    def aborted_total(self) -> int:
        return sum(r.aborted for r in self.services)

    def __str__(self) -> str:
        return "\n".join(r.line() for r in self.services)


# ---------------------------------------------------------------------------
# the running system


class RunningSystem:
    """A set of service instances sharing one in-process transport."""

    def __init__(self, checked: CheckedProgram, config: ValueTree, invoke_timeout: float):
        self.checked = checked
        self.config = config
        self.invoke_timeout = invoke_timeout
        self.instances: dict[str, ServiceInstance] = {}
        self._local: dict[str, _Endpoint] = {}
        self._servers: list[HttpPortServer] = []
        self._report: SystemReport | None = None
        self._lock = threading.Lock()

    # -- transports --------------------------------------------------------

    def local_invoke_rr(
        self, location: Location, operation: str, request: ValueTree, timeout: float
    ) -> ValueTree | Fault:
        endpoint = self._local.get(location.name or "")
        if endpoint is None:
            raise TransportError(f"nothing listens at {location}")
        info = endpoint.ops.get(operation)
        if info is None or info.kind != "rr":
            return Fault(
                "UnknownOperation",
                ValueTree(f"no request-response operation '{operation}' at {location}"),
            )
        return endpoint.instance.offer_rr(info, request, timeout)

    def local_invoke_ow(self, location: Location, operation: str, message: ValueTree) -> None:
        endpoint = self._local.get(location.name or "")
        if endpoint is None:
            raise TransportError(f"nothing listens at {location}")
        info = endpoint.ops.get(operation)
        if info is None or info.kind != "ow":
            raise TransportError(f"no one-way operation '{operation}' at {location}")
        endpoint.instance.offer_ow(info, message)

    def _dispatcher_for(self, endpoint: _Endpoint):
        def dispatch(operation: str, tree: ValueTree) -> tuple:
            if endpoint.instance.stopped:
                raise transport.stopped()
            info = endpoint.ops.get(operation)
            if info is None:
                return (
                    "fault",
                    Fault(
                        "UnknownOperation",
                        ValueTree(f"no operation '{operation}' at this port"),
                    ),
                )
            if info.kind == "rr":
                try:
                    result = endpoint.instance.offer_rr(info, tree, self.invoke_timeout)
                except TransportError:
                    raise transport.stopped() from None
                if isinstance(result, Fault):
                    return ("fault", result)
                return ("ok", result)
            try:
                endpoint.instance.offer_ow(info, tree)
            except TransportError:
                raise transport.stopped() from None
            return ("accepted", None)

        return dispatch

    # -- client API ----------------------------------------------------------

    def _resolve_target(self, target: "str | Location") -> Location:
        if isinstance(target, Location):
            return target
        if target.startswith(("local://", "socket://")):
            return Location.parse(target)
        instance = self.instances.get(target)
        if instance is None or not instance.input_locations:
            raise MonosliceError(f"no such running service or location: {target!r}")
        return instance.input_locations[0]

    def invoke_rr(
        self,
        target: "str | Location",
        operation: str,
        request: ValueTree,
        timeout: float | None = None,
    ) -> ValueTree | Fault:
        """Call a request-response operation; returns the reply tree or the fault.

        Raises TransportError when the target is unreachable.
        """
        location = self._resolve_target(target)
        timeout = timeout if timeout is not None else self.invoke_timeout
        if location.scheme == "local":
            return self.local_invoke_rr(location, operation, request, timeout)
        return http_invoke_rr(location, operation, request, timeout)

    def invoke_ow(self, target: "str | Location", operation: str, message: ValueTree) -> None:
        """Send a one-way message; returns once the target accepted it."""
        location = self._resolve_target(target)
        if location.scheme == "local":
            self.local_invoke_ow(location, operation, message)
        else:
            http_invoke_ow(location, operation, message, self.invoke_timeout)

    # -- lifecycle -------------------------------------------------------------

    def wait_executables(self, timeout: float | None = None) -> dict[str, Fault | None]:
        """Block until executable services finish; returns their exit faults."""
        results: dict[str, Fault | None] = {}
        for instance in self.instances.values():
            if instance.is_executable and instance._executable_thread is not None:
                instance._executable_thread.join(timeout)
                results[instance.name] = instance.exit_fault
        return results

    def shutdown(self, timeout: float = DEFAULT_SHUTDOWN_TIMEOUT) -> SystemReport:
        """Stop accepting, drain in-flight handlers up to the timeout, report."""
        with self._lock:
            if self._report is not None:
                return self._report
            for server in self._servers:
                server.close()
            self._local.clear()
            for instance in self.instances.values():
                instance.request_stop()
            per_instance = timeout / max(len(self.instances), 1)
            report = SystemReport()
            for instance in self.instances.values():
                aborted = instance.join(per_instance)
                report.services.append(
                    ServiceReport(
                        name=instance.name,
                        served=instance.served,
                        faults=list(instance.fault_names),
                        executable=instance.is_executable,
                        executable_fault=(
                            instance.exit_fault.name if instance.exit_fault else None
                        ),
                        aborted=aborted,
                    )
                )
            self._report = report
            return report

    def __enter__(self) -> "RunningSystem":
        return self

    def __exit__(self, *exc_info) -> None:
        self.shutdown()


def start(
    checked: CheckedProgram,
    config: ValueTree,
    services: list[str] | None = None,
    invoke_timeout: float = DEFAULT_INVOKE_TIMEOUT,
) -> RunningSystem:
    """Start the selected services (all by default) and return the system.

    Startup is all-or-nothing: any bind failure tears down everything
    already bound and raises BindError.
    """
    all_names = [s.name for s in checked.program.services]
    if services is None:
        names = all_names
    else:
        unknown = [n for n in services if n not in checked.service_table]
        if unknown:
            raise MonosliceError(f"unknown service(s): {', '.join(unknown)}")
        names = [n for n in all_names if n in set(services)]
    if not names:
        raise NoServices("no services selected")

    issues = validate_config(checked, config, names)
    if issues:
        raise issues[0]

    system = RunningSystem(checked, config, invoke_timeout)
    try:
        for name in names:
            decl = checked.service_table[name]
            param = decl.config.name if decl.config else None
            instance = ServiceInstance(system, decl, config.copy())
            for port in decl.output_ports:
                instance.set_binding(port.name, resolve_location(config, port.location, param))
            for port in decl.input_ports:
                location = resolve_location(config, port.location, param)
                endpoint = _Endpoint(instance, checked.port_ops[(name, port.name)])
                if location.scheme == "local":
                    if location.name in system._local:
                        raise BindError(str(location), "already bound in this process")
                    system._local[location.name] = endpoint
                else:
                    try:
                        server = HttpPortServer(location.port, system._dispatcher_for(endpoint))
                    except OSError as exc:
                        raise BindError(str(location), str(exc)) from exc
                    system._servers.append(server)
                instance.input_locations.append(location)
            system.instances[name] = instance
        for server in system._servers:
            server.start()
        for instance in system.instances.values():
            instance.start_workers()
        for instance in system.instances.values():
            instance.start_executable()
    except BaseException:
        for server in system._servers:
            try:
                server.close()
            except Exception:
                pass
        raise
    return system
