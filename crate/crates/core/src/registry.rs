use alloc::collections::BTreeMap;

use crate::cgra::SpeedupTable;
use crate::runtime::KernelFn;
use crate::token::{NIBBLE_MAX, TERMINATE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("task id {0} is reserved for TERMINATE")]
    Reserved(u8),
    #[error("task id {0} does not fit in 4 bits")]
    OutOfRange(u8),
    #[error("task id {0} registered twice")]
    Duplicate(u8),
    #[error("a root task is already registered (id {existing}); cannot add root {attempted}")]
    SecondRoot { existing: u8, attempted: u8 },
    #[error("no root task registered")]
    NoRoot,
    #[error("task id {0} is not registered")]
    Unknown(u8),
}

pub struct KernelDescriptor<M, W> {
    pub name: &'static str,
    pub kernel: KernelFn<M, W>,
    pub is_root: bool,
    pub speedup: SpeedupTable,
}

impl<M, W> Clone for KernelDescriptor<M, W> {
    fn clone(&self) -> Self {
        KernelDescriptor { name: self.name, kernel: self.kernel, is_root: self.is_root, speedup: self.speedup }
    }
}

/// Kernels known to the runtime, keyed by task id.
pub struct TaskRegistry<M, W> {
    tasks: BTreeMap<u8, KernelDescriptor<M, W>>,
}

impl<M, W> Default for TaskRegistry<M, W> {
    fn default() -> Self {
        TaskRegistry { tasks: BTreeMap::new() }
    }
}

impl<M, W> TaskRegistry<M, W> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn task_register(
        &mut self,
        task_id: u8,
        name: &'static str,
        kernel: KernelFn<M, W>,
        is_root: bool,
        speedup: SpeedupTable,
    ) -> Result<(), RegistryError> {
        if task_id == TERMINATE {
            return Err(RegistryError::Reserved(task_id));
        }
        if task_id > NIBBLE_MAX {
            return Err(RegistryError::OutOfRange(task_id));
        }
        if self.tasks.contains_key(&task_id) {
            return Err(RegistryError::Duplicate(task_id));
        }
        if is_root {
            if let Some(existing) = self.root() {
                return Err(RegistryError::SecondRoot { existing, attempted: task_id });
            }
        }
        self.tasks.insert(task_id, KernelDescriptor { name, kernel, is_root, speedup });
        Ok(())
    }

    pub fn get(&self, task_id: u8) -> Result<&KernelDescriptor<M, W>, RegistryError> {
        self.tasks.get(&task_id).ok_or(RegistryError::Unknown(task_id))
    }

    pub fn get_mut(&mut self, task_id: u8) -> Result<&mut KernelDescriptor<M, W>, RegistryError> {
        self.tasks.get_mut(&task_id).ok_or(RegistryError::Unknown(task_id))
    }

    pub fn contains(&self, task_id: u8) -> bool {
        self.tasks.contains_key(&task_id)
    }

    pub fn root(&self) -> Option<u8> {
        self.tasks.iter().find(|(_, d)| d.is_root).map(|(&id, _)| id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u8, &KernelDescriptor<M, W>)> {
        self.tasks.iter().map(|(&id, d)| (id, d))
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }
}
