import time

import pytest

from cache_manager import CacheManager, cache_manager, cached, clear_cache, get_cache_stats, make_key
from char_sums import MomentKind, delta_table, kloosterman_table, moment
from disk_cache import CacheStore, decode_int_map, encode_int_map, get_cache_store
from finite_field import build_field


def test_cache_manager_basic_operations():
    cache = CacheManager()
    assert cache.get('missing') is None
    cache.set('delta:3^1:1', (0, 1, 1))
    assert cache.get('delta:3^1:1') == (0, 1, 1)
    assert cache.delete('delta:3^1:1')
    assert not cache.delete('delta:3^1:1')
    stats = cache.get_stats()
    assert stats['hits'] == 1
    assert stats['misses'] == 1
    assert stats['deletes'] == 1


def test_cache_manager_expiry():
    cache = CacheManager(default_ttl=0.01)
    cache.set('k', 1)
    time.sleep(0.05)
    assert cache.get('k') is None
    cache.set('k', 2, ttl=60)
    assert cache.cleanup_expired() == 0
    assert cache.get_info()['namespaces'] == {'k': 1}


def test_make_key_uses_field_spec_and_enum_values(f9):
    assert make_key('moment', f9, MomentKind.SK, 3) == 'moment:3^2:SK:3'
    assert make_key('x', 1, flag=True) == 'x:1:flag=True'


def test_cached_decorator_memoizes():
    calls = []

    @cached('square_test')
    def square(x):
        calls.append(x)
        return x * x

    assert square(4) == 16
    assert square(4) == 16
    assert calls == [4]
    assert square.cache_namespace == 'square_test'


def test_disk_store_round_trip(tmp_path):
    store = CacheStore(str(tmp_path))
    store.put('delta', 'delta:3^1:2', {'m': 2, 'values': ['2', '1', '1']})
    assert store.get('delta', 'delta:3^1:2') == {'m': 2, 'values': ['2', '1', '1']}
    assert store.get('delta', 'nothing') is None
    assert store.get_stats()['namespaces'] == {'delta': 1}
    assert store.clear() == 1
    assert store.get_stats()['total_entries'] == 0


def test_disk_store_disabled_without_directory():
    assert get_cache_store() is None


def test_persisted_values_survive_a_cleared_memory_cache(tmp_path, monkeypatch):
    monkeypatch.setenv('KLOOSTERMAN_CACHE_DIR', str(tmp_path))
    t = build_field(2)
    clear_cache()
    table = delta_table(t, 2)
    value = moment(t, MomentKind.T12SK, 4)
    store = get_cache_store()
    assert store is not None
    namespaces = store.get_stats()['namespaces']
    assert namespaces['delta'] >= 1
    assert namespaces['moment'] >= 1
    assert namespaces['kloosterman'] == 1
    sums = kloosterman_table(t)

    clear_cache()
    assert kloosterman_table(t) == sums
    assert delta_table(t, 2) == table
    assert moment(t, MomentKind.T12SK, 4) == value
    assert get_cache_stats()['sets'] >= 2


def test_int_map_codec_keeps_big_integers():
    values = {0: 3 ** 200, 5: -7}
    assert decode_int_map(encode_int_map(values)) == values
