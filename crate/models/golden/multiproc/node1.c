/* node1 */
#include <stdint.h>
#include <avr/io.h>
#include "blocks.h"
#include "com.h"
static uint16_t NoSpeedValue_value_buf[1];
static uint16_t TTTTemperature_temp_buf[1];
void comA_thread(void)
{
    switch (comA_next()) {
    case ID_x1: com_recv_comA(GATE_comA, node3, TTTTemperature_temp_buf, sizeof TTTTemperature_temp_buf); break;
    }
}
int main(void)
{
    NoSpeedValue_init();
    LCDShow_init();
    for (;;) {
        NoSpeedValue_loop();
        sem_wait(&Suc0);
        LCDShow_loop();
        timer_wait(); /* 10 STU */
    }
    NoSpeedValue_end();
    LCDShow_end();
    return 0;
}
/* end of node1 */
