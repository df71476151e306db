"""
Cache Manager for the Kloosterman moment toolkit
In-memory memoization of field tables, character sums and moment values
"""

import time
import threading
import logging
from enum import Enum
from functools import wraps
from typing import Any, Callable, Dict, Optional

logger = logging.getLogger(__name__)


class CacheManager:
    """Thread-safe in-memory cache with optional TTL support"""

    def __init__(self, default_ttl: Optional[float] = None):
        # Cached values are pure functions of their key, so entries never expire by default
        self.cache: Dict[str, Dict[str, Any]] = {}
        self.default_ttl = default_ttl
        self.lock = threading.RLock()
        self.stats = self._empty_stats()

    @staticmethod
    def _empty_stats() -> Dict[str, int]:
        return {
            'hits': 0,
            'misses': 0,
            'sets': 0,
            'deletes': 0,
            'expired': 0
        }

    def _expired(self, entry: Dict[str, Any], now: float) -> bool:
        return entry['expires_at'] is not None and now > entry['expires_at']

    def get(self, key: str) -> Optional[Any]:
        """Get value from cache"""
        with self.lock:
            if key not in self.cache:
                self.stats['misses'] += 1
                return None

            entry = self.cache[key]
            if self._expired(entry, time.time()):
                del self.cache[key]
                self.stats['expired'] += 1
                self.stats['misses'] += 1
                return None

            self.stats['hits'] += 1
            return entry['value']

    def set(self, key: str, value: Any, ttl: Optional[float] = None) -> None:
        """Set value in cache with an optional TTL"""
        with self.lock:
            if ttl is None:
                ttl = self.default_ttl
            now = time.time()
            self.cache[key] = {
                'value': value,
                'expires_at': now + ttl if ttl is not None else None,
                'created_at': now
            }
            self.stats['sets'] += 1

    def delete(self, key: str) -> bool:
        """Delete key from cache"""
        with self.lock:
            if key in self.cache:
                del self.cache[key]
                self.stats['deletes'] += 1
                return True
            return False

    def clear(self) -> None:
        """Clear all cache entries"""
        with self.lock:
            self.cache.clear()
            self.stats = self._empty_stats()

    def cleanup_expired(self) -> int:
        """Remove expired entries and return count of cleaned entries"""
        with self.lock:
            now = time.time()
            expired_keys = [key for key, entry in self.cache.items() if self._expired(entry, now)]
            for key in expired_keys:
                del self.cache[key]
                self.stats['expired'] += 1
            return len(expired_keys)

    def get_stats(self) -> Dict[str, Any]:
        """Get cache statistics"""
        with self.lock:
            total_requests = self.stats['hits'] + self.stats['misses']
            hit_rate = (self.stats['hits'] / total_requests * 100) if total_requests > 0 else 0

            return {
                'size': len(self.cache),
                'hits': self.stats['hits'],
                'misses': self.stats['misses'],
                'hit_rate': round(hit_rate, 2),
                'sets': self.stats['sets'],
                'deletes': self.stats['deletes'],
                'expired': self.stats['expired']
            }

    def get_info(self) -> Dict[str, Any]:
        """Get detailed cache information grouped by namespace"""
        with self.lock:
            namespaces: Dict[str, int] = {}
            for key in self.cache:
                namespace = key.split(':', 1)[0]
                namespaces[namespace] = namespaces.get(namespace, 0) + 1
            return {
                'stats': self.get_stats(),
                'namespaces': namespaces,
                'total_entries': len(self.cache)
            }


# Global cache instance
cache_manager = CacheManager()


def get_cache_stats() -> Dict[str, Any]:
    """Get cache statistics"""
    return cache_manager.get_stats()


def clear_cache() -> None:
    """Clear all cache entries"""
    cache_manager.clear()


def key_part(arg: Any) -> str:
    """Render one argument as a cache key fragment; field tables render as their field spec"""
    render = getattr(arg, 'cache_key', None)
    if callable(render):
        return render()
    if isinstance(arg, Enum):
        return str(arg.value)
    return str(arg)


def make_key(namespace: str, *args, **kwargs) -> str:
    """Generate a cache key such as 'delta:3^2:2'"""
    parts = [namespace]
    parts.extend(key_part(arg) for arg in args)
    parts.extend(f"{k}={key_part(v)}" for k, v in sorted(kwargs.items()))
    return ":".join(parts)


def cached(namespace: str,
           ttl: Optional[float] = None,
           key_func: Optional[Callable] = None,
           persist: bool = False,
           encode: Optional[Callable[[Any], Any]] = None,
           decode: Optional[Callable[[Any], Any]] = None):
    """Decorator to cache function results

    Args:
        namespace: Key prefix, also used as the on-disk namespace
        ttl: Optional expiry in seconds for the in-memory entry
        key_func: Custom key builder taking the wrapped function's arguments
        persist: Also read/write the sqlite store when a cache directory is configured
        encode: Converts a result into a JSON-compatible value before persisting
        decode: Inverse of encode, applied when loading a persisted value
    """
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            if key_func:
                cache_key = key_func(*args, **kwargs)
            else:
                cache_key = make_key(namespace, *args, **kwargs)

            cached_result = cache_manager.get(cache_key)
            if cached_result is not None:
                logger.debug(f"Cache hit for {cache_key}")
                return cached_result

            store = None
            if persist:
                from disk_cache import get_cache_store
                store = get_cache_store()
                if store is not None:
                    stored = store.get(namespace, cache_key)
                    if stored is not None:
                        result = decode(stored) if decode else stored
                        cache_manager.set(cache_key, result, ttl)
                        logger.debug(f"Disk cache hit for {cache_key}")
                        return result

            result = func(*args, **kwargs)
            cache_manager.set(cache_key, result, ttl)
            if store is not None:
                store.put(namespace, cache_key, encode(result) if encode else result)
            logger.debug(f"Cached result for {cache_key}")
            return result

        wrapper.cache_namespace = namespace
        return wrapper
    return decorator
