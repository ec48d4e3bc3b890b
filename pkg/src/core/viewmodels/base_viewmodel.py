"""Base ViewModel class for long-running coordinators"""

import logging

logger = logging.getLogger(__name__)


class BaseViewModel:
    """
    Base class for all ViewModels.
    Provides an observer pattern for progress and state changes.

    Subclasses call notify_listeners() whenever their state changes; a
    failing listener is logged and never interrupts the computation.
    """

    def __init__(self):
        self._listeners = []

    def add_listener(self, callback):
        """
        Register a callback invoked with the ViewModel on every change.

        Args:
            callback: Function taking the ViewModel as its only argument
        """
        if callable(callback) and callback not in self._listeners:
            self._listeners.append(callback)

    def remove_listener(self, callback):
        if callback in self._listeners:
            self._listeners.remove(callback)

    def notify_listeners(self):
        for callback in list(self._listeners):
            try:
                callback(self)
            except Exception as e:
                logger.warning(f"notify_listeners: listener {callback!r} failed: {e}")

    def dispose(self):
        """Release listeners. Override to clean up subclass resources."""
        self._listeners.clear()
