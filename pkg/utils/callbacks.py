# OntoGuard, GPL-3.0 license
"""
Scenario hooks: per-run, per-quarter and per-stage callbacks
"""


class Callbacks:
    """"
    Registered actions for the scenario harness hooks
    """

    def __init__(self):
        self._callbacks = {
            'on_run_start': [],  # (name, seed)
            'on_quarter_start': [],  # (quarter,)
            'on_stage_end': [],  # (quarter, layer, stage)
            'on_quarter_end': [],  # (values, quarter)
            'on_run_end': [],}  # (quarters,)

    def register_action(self, hook, name='', callback=None):
        """
        Register a new action to a callback hook

        Args:
            hook: The callback hook name to register the action to
            name: The name of the action for later reference
            callback: The callback to fire
        """
        assert hook in self._callbacks, f"hook '{hook}' not found in callbacks {self._callbacks}"
        assert callable(callback), f"callback '{callback}' is not callable"
        self._callbacks[hook].append({'name': name, 'callback': callback})

    def run(self, hook, *args, **kwargs):
        # Fire the hook's actions in registration order
        assert hook in self._callbacks, f"hook '{hook}' not found in callbacks {self._callbacks}"
        for action in self._callbacks[hook]:
            action['callback'](*args, **kwargs)
