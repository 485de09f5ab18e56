//! Document-level parallelism with stable output order.
//!
//! Workers pull items from a shared cursor, so completion order is
//! arbitrary, but results are placed by input index: output order never
//! depends on scheduling.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Applies `f` to every item on up to `workers` threads, returning results
/// in input order. `workers == 0` is treated as 1.
pub fn par_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    match par_try_map(items, workers, |item| Ok::<R, std::convert::Infallible>(f(item))) {
        Ok(results) => results,
        Err(infallible) => match infallible {},
    }
}

/// Fallible [`par_map`]: stops scheduling new items once any worker fails
/// and returns the error of the smallest input index, so the reported error
/// is deterministic regardless of thread timing.
pub fn par_try_map<T, R, E, F>(items: &[T], workers: usize, f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync,
{
    let workers = workers.max(1).min(items.len().max(1));
    if workers == 1 {
        return items.iter().map(&f).collect();
    }

    let cursor = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    let failure: Mutex<Option<(usize, E)>> = Mutex::new(None);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = cursor.fetch_add(1, Ordering::Relaxed);
                if index >= items.len() {
                    break;
                }
                match f(&items[index]) {
                    Ok(result) => {
                        slots.lock().unwrap()[index] = Some(result);
                    }
                    Err(error) => {
                        let mut failure = failure.lock().unwrap();
                        if failure.as_ref().is_none_or(|(i, _)| index < *i) {
                            *failure = Some((index, error));
                        }
                        // Drain the cursor so other workers wind down.
                        cursor.fetch_max(items.len(), Ordering::Relaxed);
                    }
                }
            });
        }
    });

    if let Some((_, error)) = failure.into_inner().unwrap() {
        return Err(error);
    }
    Ok(slots.into_inner().unwrap().into_iter().map(|slot| slot.expect("every slot filled")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_input_order_for_any_worker_count() {
        let items: Vec<usize> = (0..257).collect();
        let expected: Vec<usize> = items.iter().map(|i| i * i).collect();
        for workers in [0, 1, 2, 4, 8] {
            assert_eq!(par_map(&items, workers, |&i| i * i), expected, "workers={workers}");
        }
    }

    #[test]
    fn empty_input_yields_empty_output() {
        let items: Vec<u8> = Vec::new();
        assert!(par_map(&items, 4, |&b| b).is_empty());
    }

    #[test]
    fn error_of_smallest_index_wins() {
        let items: Vec<usize> = (0..100).collect();
        for workers in [1, 4, 8] {
            let result = par_try_map(&items, workers, |&i| {
                if i % 7 == 3 { Err(format!("item {i}")) } else { Ok(i) }
            });
            assert_eq!(result, Err("item 3".to_string()), "workers={workers}");
        }
    }

    #[test]
    fn uses_multiple_threads_when_asked() {
        let items: Vec<usize> = (0..64).collect();
        let seen: Mutex<Vec<std::thread::ThreadId>> = Mutex::new(Vec::new());
        par_map(&items, 4, |_| {
            let id = std::thread::current().id();
            let mut seen = seen.lock().unwrap();
            if !seen.contains(&id) {
                seen.push(id);
            }
            std::thread::sleep(std::time::Duration::from_millis(1));
        });
        assert!(seen.lock().unwrap().len() > 1, "work spread across threads");
    }
}
