from .interface import TransitionSystem
from typing import Dict, Type, List, Any


class SemanticsRegistry:
    """Registry for available transition systems.
    Register a transition system class with the decorator:

        @SemanticsRegistry.register("name")

    Methods:
        register
        _is_method_overridden
        get_registered_semantics
        get_semantics_class
        get_capabilities
        create
    """

    _systems: Dict[str, Dict[str, Any]] = {}

    @classmethod
    def register(cls, name: str):
        """Register transition systems using a decorator.

        This method is used as a decorator to register classes in the _systems dict.
        Note: Decorators are run at import time.

        Args:
            name: The name the transition system is selected by.

        Returns:
            A decorator function that registers the class.
        """
        def decorator(system_class: Type[TransitionSystem]):
            capabilities = {
                'render': cls._is_method_overridden(system_class, 'render_state'),
                'terminal': cls._is_method_overridden(system_class, 'conforms'),
            }
            cls._systems[name] = {
                'class': system_class,
                'capabilities': capabilities
            }
            return system_class
        return decorator

    @staticmethod
    def _is_method_overridden(system_class: Type[TransitionSystem], method_name: str) -> bool:
        """Check if a method is overridden in the concrete subclass."""
        if not hasattr(system_class, method_name):
            return False
        concrete_method = getattr(system_class, method_name)
        base_method = getattr(TransitionSystem, method_name)
        return concrete_method is not base_method

    @classmethod
    def get_registered_semantics(cls) -> List[str]:
        return list(cls._systems.keys())

    @classmethod
    def get_semantics_class(cls, name: str) -> Type[TransitionSystem]:
        if name not in cls._systems:
            raise UnknownSemanticsError(f"Semantics {name} is not registered")
        return cls._systems[name]['class']

    @classmethod
    def get_capabilities(cls, name: str) -> Dict[str, bool]:
        if name not in cls._systems:
            raise UnknownSemanticsError(f"Semantics {name} is not registered")
        return cls._systems[name]['capabilities']

    @classmethod
    def create(cls, name: str, *args, **kwargs) -> TransitionSystem:
        ''' Returns an instance of the transition system registered under name
        '''
        return cls.get_semantics_class(name)(*args, **kwargs)


class UnknownSemanticsError(Exception):
    pass
