"""
事件管理系統
降階流程與信賴域迭代的進度事件分發；
基準測試的工作執行緒只排隊事件，由主執行緒統一分發
"""

from typing import Dict, List, Callable, Any, Optional
from enum import Enum
import logging
import threading
import time


class EventType(Enum):
    """事件類型枚舉"""
    # 降階流程事件
    REDUCTION_START = "reduction_start"
    REDUCTION_COMPLETE = "reduction_complete"

    # 信賴域事件
    TR_ITERATION = "tr_iteration"
    TR_STEP_ACCEPTED = "tr_step_accepted"
    TR_STEP_REJECTED = "tr_step_rejected"
    TR_CONVERGED = "tr_converged"
    TR_MAX_ITERATIONS = "tr_max_iterations"

    # 基準測試事件
    BENCH_ROW = "bench_row"


class Event:
    """事件類"""

    def __init__(self, event_type: EventType, data: Optional[Dict[str, Any]] = None,
                 sender: Optional[Any] = None):
        self.type = event_type
        self.data = data or {}
        self.sender = sender
        self.timestamp = time.time()
        self.thread = threading.current_thread().name

    def get_data(self, key: str, default: Any = None) -> Any:
        """安全獲取事件數據"""
        return self.data.get(key, default)


class EventManager:
    """事件管理器"""

    def __init__(self):
        self.listeners: Dict[EventType, List[Callable]] = {}
        self.event_queue: List[Event] = []
        self._queue_lock = threading.Lock()
        self.logger = logging.getLogger(__name__)

    def subscribe(self, event_type: EventType, callback: Callable[[Event], None]) -> None:
        """訂閱事件"""
        if event_type not in self.listeners:
            self.listeners[event_type] = []

        if callback not in self.listeners[event_type]:
            self.listeners[event_type].append(callback)
            self.logger.debug(f"已訂閱事件: {event_type.value}")

    def unsubscribe(self, event_type: EventType, callback: Callable[[Event], None]) -> None:
        """取消訂閱事件"""
        if event_type in self.listeners and callback in self.listeners[event_type]:
            self.listeners[event_type].remove(callback)
            self.logger.debug(f"已取消訂閱事件: {event_type.value}")

    def emit(self, event_type: EventType, data: Optional[Dict[str, Any]] = None,
             sender: Optional[Any] = None, immediate: bool = False) -> None:
        """發送事件；非即時事件可由任意執行緒排隊"""
        event = Event(event_type, data, sender)

        if immediate:
            self._dispatch_event(event)
        else:
            with self._queue_lock:
                self.event_queue.append(event)

    def process_events(self) -> int:
        """在呼叫者的執行緒分發已排隊的事件，回傳分發數量"""
        with self._queue_lock:
            events_to_process = self.event_queue
            self.event_queue = []

        for event in events_to_process:
            self._dispatch_event(event)
        return len(events_to_process)

    def _dispatch_event(self, event: Event) -> None:
        """分發事件到監聽器，監聽器錯誤只記錄不拋出"""
        for listener in self.listeners.get(event.type, []):
            try:
                listener(event)
            except Exception as e:
                self.logger.error(f"事件處理錯誤 {event.type.value}: {e}")


class EventRecorder:
    """按順序收集事件（追蹤輸出與測試使用）"""

    def __init__(self, manager: EventManager, event_types: Optional[List[EventType]] = None):
        self.events: List[Event] = []
        self._manager = manager
        self._types = list(event_types) if event_types is not None else list(EventType)
        for event_type in self._types:
            manager.subscribe(event_type, self._record)

    def _record(self, event: Event) -> None:
        self.events.append(event)

    def of_type(self, event_type: EventType) -> List[Event]:
        return [e for e in self.events if e.type is event_type]

    def detach(self) -> None:
        for event_type in self._types:
            self._manager.unsubscribe(event_type, self._record)
