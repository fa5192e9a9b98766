from loguru import logger

from src.data_models import (
    Hazard,
    HazardKindEnum,
    IterationRecord,
    ScheduleCounters,
    ScheduleEvent,
    ScheduleOrderEnum,
    ScheduleTrace,
    TileConfig,
)
from src.exceptions import BadParams


class _Buffers:
    """PipeStage staging slots: which step each slot holds and whether it was read."""

    def __init__(self, pipe_stage: int, meta_prefetch_stage: int) -> None:
        self.pipe_stage = pipe_stage
        self.meta_prefetch_stage = meta_prefetch_stage
        self.resident: list[int | None] = [None] * pipe_stage
        self.consumed: list[bool] = [True] * pipe_stage
        self.loaded_bulks: set[int] = set()
        self.hazards: list[Hazard] = []

    def bulk_load(self, metaload_step: int) -> None:
        self.loaded_bulks.add(metaload_step // self.meta_prefetch_stage)

    def stitch(self, load_step: int) -> int:
        slot = load_step % self.pipe_stage
        if load_step // self.meta_prefetch_stage not in self.loaded_bulks:
            self.hazards.append(Hazard(step=load_step, slot=slot, kind=HazardKindEnum.metadata_not_loaded))
        held = self.resident[slot]
        if held is not None and not self.consumed[slot]:
            self.hazards.append(Hazard(step=held, slot=slot, kind=HazardKindEnum.overwrite_before_read))
        self.resident[slot] = load_step
        self.consumed[slot] = False
        return slot

    def mma(self, step: int) -> int:
        slot = step % self.pipe_stage
        held = self.resident[slot]
        if held is None:
            self.hazards.append(Hazard(step=step, slot=slot, kind=HazardKindEnum.read_before_write))
        elif held != step:
            self.hazards.append(Hazard(step=step, slot=slot, kind=HazardKindEnum.stale_read))
        else:
            self.consumed[slot] = True
        return slot


def pipeline_simulate(total_step: int,
                      cfg: TileConfig,
                      intra_iteration_order: ScheduleOrderEnum | str = ScheduleOrderEnum.load_then_compute,
                      lead: int | None = None
                      ) -> ScheduleTrace:
    '''
    Step-level simulation of the metadata-prefetch SpMM pipeline.

    Three counters advance together: metaload_step starts at 0, load_step
    MetaPrefetchStage behind it and step `lead` behind load_step (PipeStage+1
    as written in the kernel listing). Per iteration:

        BulkLoadMeta   when metaload_step % MetaPrefetchStage == 0 and metaload_step < total_step
        StitchTile     into slot load_step % PipeStage when 0 <= load_step < total_step
        WarpMMA        from slot step % PipeStage when step >= 0

    intra_iteration_order decides whether the stitch or the MMA goes first.
    Hazards are recorded when a slot is overwritten before its tile was
    read, when an MMA reads a slot holding another step's tile or a slot
    never written, and when a stitch precedes its metadata bulk.
    '''
    if total_step < 0:
        raise BadParams(f'total_step must be >= 0, got {total_step}')
    order = ScheduleOrderEnum(intra_iteration_order)
    lead = cfg.pipe_stage + 1 if lead is None else lead
    if lead < 1:
        raise BadParams(f'lead must be >= 1, got {lead}')
    mps = cfg.meta_prefetch_stage
    buffers = _Buffers(cfg.pipe_stage, mps)
    counters = ScheduleCounters(total_step=total_step)
    iterations: list[IterationRecord] = []

    metaload_step = 0
    load_step = metaload_step - mps
    step = load_step - lead
    while step < total_step:
        record = IterationRecord(metaload_step=metaload_step, load_step=load_step, step=step)
        if metaload_step % mps == 0 and metaload_step < total_step:
            buffers.bulk_load(metaload_step)
            counters.meta_bulk_loads += 1
            record.events.append(ScheduleEvent(kind='BulkLoadMeta', step=metaload_step))

        def do_stitch() -> None:
            if 0 <= load_step < total_step:
                slot = buffers.stitch(load_step)
                counters.stitches += 1
                record.events.append(ScheduleEvent(kind='StitchTile', slot=slot, step=load_step))

        def do_mma() -> None:
            if step >= 0:
                slot = buffers.mma(step)
                counters.mmas += 1
                record.events.append(ScheduleEvent(kind='WarpMMA', slot=slot, step=step))

        if order is ScheduleOrderEnum.load_then_compute:
            do_stitch()
            do_mma()
        else:
            do_mma()
            do_stitch()
        iterations.append(record)
        step, load_step, metaload_step = step + 1, load_step + 1, metaload_step + 1

    trace = ScheduleTrace(
        config={
            'total_step': total_step,
            'pipe_stage': cfg.pipe_stage,
            'meta_prefetch_stage': mps,
            'lead': lead,
            'order': order.value,
        },
        iterations=iterations,
        hazards=buffers.hazards,
        counters=counters,
    )
    logger.info(
        f'pipeline simulation: {len(iterations)} iterations, counters {counters.model_dump()}, '
        f'{len(trace.hazards)} hazard(s)'
    )
    return trace
