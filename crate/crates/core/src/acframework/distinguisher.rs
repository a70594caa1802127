use std::sync::Arc;

use super::machine::{MachineError, StepCtx};
use super::message::Message;

/// What a distinguisher does after observing one flushed output.
pub enum DistAction {
    Continue,
    /// Feed new inputs to the listed export names; they are delivered after
    /// the current flush batch completes.
    Send(Vec<(String, Message)>),
    /// End the run immediately with this guess.
    Guess(u8),
}

/// The environment of a run: it opens play, watches every observable event,
/// and must end with a single bit naming which of two worlds it believes it
/// inhabits (0 = the first of the compared pair).
pub trait Distinguisher {
    fn begin(&mut self, ctx: &mut StepCtx<'_>) -> Result<Vec<(String, Message)>, MachineError>;

    fn observe(
        &mut self,
        port: &str,
        msg: &Message,
        ctx: &mut StepCtx<'_>,
    ) -> Result<DistAction, MachineError>;

    /// Called at quiescence if no guess was emitted along the way.
    fn finish(&mut self, ctx: &mut StepCtx<'_>) -> Result<u8, MachineError>;
}

/// Named, re-instantiable distinguisher, mirroring [`super::MachineSpec`].
#[derive(Clone)]
pub struct DistinguisherSpec {
    name: String,
    factory: Arc<dyn Fn() -> Box<dyn Distinguisher> + Send + Sync>,
}

impl DistinguisherSpec {
    pub fn new<D, F>(name: impl Into<String>, factory: F) -> Self
    where
        D: Distinguisher + 'static,
        F: Fn() -> D + Send + Sync + 'static,
    {
        Self { name: name.into(), factory: Arc::new(move || Box::new(factory())) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub(crate) fn instantiate(&self) -> Box<dyn Distinguisher> {
        (self.factory)()
    }
}

impl std::fmt::Debug for DistinguisherSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DistinguisherSpec").field("name", &self.name).finish()
    }
}

/// Sends a fixed batch of opening inputs, watches passively, and guesses by
/// a pure function of the observation sequence at quiescence. Covers most
/// canned distinguishers.
pub struct ScriptedObserver {
    opening: Vec<(String, Message)>,
    seen: Vec<(String, Message)>,
    decide: Arc<dyn Fn(&[(String, Message)]) -> u8 + Send + Sync>,
}

impl ScriptedObserver {
    pub fn new(
        opening: Vec<(String, Message)>,
        decide: Arc<dyn Fn(&[(String, Message)]) -> u8 + Send + Sync>,
    ) -> Self {
        Self { opening, seen: Vec::new(), decide }
    }

    /// Convenience spec constructor.
    pub fn spec(
        name: &str,
        opening: Vec<(String, Message)>,
        decide: impl Fn(&[(String, Message)]) -> u8 + Send + Sync + 'static,
    ) -> DistinguisherSpec {
        let decide: Arc<dyn Fn(&[(String, Message)]) -> u8 + Send + Sync> = Arc::new(decide);
        DistinguisherSpec::new(name, move || {
            ScriptedObserver::new(opening.clone(), decide.clone())
        })
    }
}

impl Distinguisher for ScriptedObserver {
    fn begin(&mut self, _ctx: &mut StepCtx<'_>) -> Result<Vec<(String, Message)>, MachineError> {
        Ok(self.opening.clone())
    }

    fn observe(
        &mut self,
        port: &str,
        msg: &Message,
        _ctx: &mut StepCtx<'_>,
    ) -> Result<DistAction, MachineError> {
        self.seen.push((port.to_string(), msg.clone()));
        Ok(DistAction::Continue)
    }

    fn finish(&mut self, _ctx: &mut StepCtx<'_>) -> Result<u8, MachineError> {
        Ok((self.decide)(&self.seen))
    }
}
